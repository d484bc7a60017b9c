#include "fcn/spectrum.hpp"

#include <cmath>
#include <fstream>

#include "fcn/spectral.hpp"

namespace fcn::spectrum {

SpectrumReport spectrum_report(const std::vector<double>& channel,
                               std::size_t n, std::size_t m_highlight,
                               std::size_t stride) {
    require(n >= 2, "spectrum_report: n must be >= 2");
    require(channel.size() >= n, "spectrum_report: trajectory too short");
    require(stride >= 1, "spectrum_report: stride must be >= 1");
    const std::size_t bins = 1 + n / 2;
    require(m_highlight >= 1 && m_highlight <= bins,
            "spectrum_report: m_highlight out of range");

    SpectrumReport rep;
    rep.n = n;
    rep.top_k = m_highlight;
    std::vector<double> energy(bins, 0.0);
    std::vector<double> window(n);
    for (std::size_t start = 0; start + n <= channel.size(); start += stride) {
        std::copy(channel.begin() + static_cast<std::ptrdiff_t>(start),
                  channel.begin() + static_cast<std::ptrdiff_t>(start + n),
                  window.begin());
        const auto r = spectral::rfft(window);
        for (std::size_t k = 0; k < bins; ++k) {
            const double fold =
                (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
            energy[k] += fold * std::norm(r.bins[k]);
        }
        ++rep.windows;
    }
    double total = 0.0;
    for (double e : energy) total += e;
    rep.density_pct.resize(bins);
    rep.cumulative_pct.resize(bins);
    double running = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        rep.density_pct[k] = (total > 0.0) ? 100.0 * energy[k] / total : 0.0;
        running += rep.density_pct[k];
        rep.cumulative_pct[k] = running;
    }
    rep.top_k_coverage_pct = rep.cumulative_pct[m_highlight - 1];
    return rep;
}

SpectrumReport spectrum_report(const data::Trajectory& traj,
                               std::size_t channel, std::size_t n,
                               std::size_t m_highlight, std::size_t stride) {
    const std::size_t d_s = traj.states.d;
    std::vector<double> ch(traj.states.T);
    if (channel < d_s) {
        for (std::size_t t = 0; t < traj.states.T; ++t)
            ch[t] = traj.states.at(t, channel);
    } else {
        const std::size_t ac = channel - d_s;
        require(ac < traj.actions.d, "spectrum_report: channel out of range");
        for (std::size_t t = 0; t < traj.actions.T; ++t)
            ch[t] = traj.actions.at(t, ac);
    }
    return spectrum_report(ch, n, m_highlight, stride);
}

void write_spectrum_csv(const SpectrumReport& rep, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    require(os.good(), "write_spectrum_csv: cannot open " + path);
    os << "mode,density_pct,cumulative_pct\n";
    for (std::size_t k = 0; k < rep.density_pct.size(); ++k)
        os << k << ',' << rep.density_pct[k] << ',' << rep.cumulative_pct[k]
           << '\n';
    require(os.good(), "write_spectrum_csv: write failed");
}

}  // namespace fcn::spectrum
