#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fcn/model.hpp"
#include "fcn/spectrum.hpp"

using namespace fcn;
using namespace fcn::spectrum;

TEST_CASE("mode-count heuristic reference points") {
    CHECK(model::suggest_modes(64) == 10);
    CHECK(model::suggest_modes(4) == 3);
    CHECK(model::suggest_modes(2048) == 19);
}

TEST_CASE("mode-count heuristic is monotone and capped at the real band") {
    std::size_t prev = 0;
    for (std::size_t n = 2; n <= 4096; n *= 2) {
        const std::size_t m = model::suggest_modes(n);
        CHECK(m >= prev);
        CHECK(m <= n / 2 + 1);
        CHECK(m >= 1);
        prev = m;
    }
}

TEST_CASE("pure in-grid sinusoid concentrates all energy in one mode") {
    const std::size_t n = 64;
    std::vector<double> x(8 * n);
    for (std::size_t t = 0; t < x.size(); ++t)
        x[t] = std::sin(2.0 * M_PI * 5.0 * static_cast<double>(t) /
                        static_cast<double>(n));
    SpectrumReport rep = spectrum_report(x, n, /*m_highlight=*/10);
    CHECK(rep.density_pct[5] == doctest::Approx(100.0).epsilon(1e-9));
    for (std::size_t k = 0; k < rep.density_pct.size(); ++k)
        if (k != 5) CHECK(rep.density_pct[k] < 1e-9);
    CHECK(rep.top_k_coverage_pct == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rep.windows == x.size() - n + 1);
}

TEST_CASE("densities are nonnegative and sum to 100 percent") {
    const std::size_t n = 32;
    std::vector<double> x(5 * n);
    std::uint64_t s = 1234;
    for (auto& v : x) {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        v = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    }
    SpectrumReport rep = spectrum_report(x, n, 8, /*stride=*/4);
    double total = 0.0;
    for (double d : rep.density_pct) {
        CHECK(d >= 0.0);
        total += d;
    }
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
    double run = 0.0;
    for (std::size_t k = 0; k < rep.density_pct.size(); ++k) {
        run += rep.density_pct[k];
        CHECK(rep.cumulative_pct[k] == doctest::Approx(run).epsilon(1e-9));
    }
    CHECK(rep.cumulative_pct.back() == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rep.top_k_coverage_pct == doctest::Approx(rep.cumulative_pct[7]));
}

TEST_CASE("two-tone signal splits energy by squared amplitude") {
    const std::size_t n = 64;
    std::vector<double> x(16 * n);
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double tt = static_cast<double>(t);
        x[t] = 2.0 * std::cos(2.0 * M_PI * 3.0 * tt / n) +
               1.0 * std::cos(2.0 * M_PI * 7.0 * tt / n);
    }
    // power ratio 4:1 between modes 3 and 7
    SpectrumReport rep = spectrum_report(x, n, 8);
    CHECK(rep.density_pct[3] == doctest::Approx(80.0).epsilon(1e-6));
    CHECK(rep.density_pct[7] == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(rep.top_k_coverage_pct == doctest::Approx(100.0).epsilon(1e-6));
    // modes above 7 carry nothing, so k = 4 misses the second tone
    SpectrumReport rep4 = spectrum_report(x, n, 4);
    CHECK(rep4.top_k_coverage_pct == doctest::Approx(80.0).epsilon(1e-6));
}

TEST_CASE("trajectory channel selector spans states then actions") {
    data::Trajectory tr;
    tr.dt = 0.1;
    const std::size_t n = 16, T = 5 * n;
    tr.states = RealSeq(T, 2);
    tr.actions = RealSeq(T, 1);
    for (std::size_t t = 0; t < T; ++t) {
        tr.states.at(t, 0) = std::sin(2.0 * M_PI * 2.0 * t / double(n));
        tr.states.at(t, 1) = std::sin(2.0 * M_PI * 3.0 * t / double(n));
        tr.actions.at(t, 0) = std::sin(2.0 * M_PI * 5.0 * t / double(n));
    }
    CHECK(spectrum_report(tr, 0, n, 4).density_pct[2] ==
          doctest::Approx(100.0).epsilon(1e-9));
    CHECK(spectrum_report(tr, 1, n, 4).density_pct[3] ==
          doctest::Approx(100.0).epsilon(1e-9));
    CHECK(spectrum_report(tr, 2, n, 6).density_pct[5] ==
          doctest::Approx(100.0).epsilon(1e-9));
    CHECK_THROWS(spectrum_report(tr, 3, n, 4));
}

TEST_CASE("csv output has the documented header and one row per mode") {
    const std::size_t n = 16;
    std::vector<double> x(3 * n, 0.0);
    x[0] = 1.0;
    SpectrumReport rep = spectrum_report(x, n, 4);
    const std::string path = "/tmp/fcn_test_spec.csv";
    write_spectrum_csv(rep, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "mode,density_pct,cumulative_pct");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == n / 2 + 1);
    std::remove(path.c_str());
}
