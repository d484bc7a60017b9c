#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fcn/data.hpp"
#include "fcn/types.hpp"

namespace fcn::spectrum {

struct SpectrumReport {
    std::size_t n = 0;
    std::size_t windows = 0;
    std::vector<double> density_pct;     // one per mode, sums to 100
    std::vector<double> cumulative_pct;  // running sum
    double top_k_coverage_pct = 0.0;     // coverage of the k lowest modes
    std::size_t top_k = 0;
};

// Conjugate-folded energy density per mode, averaged over sliding windows of
// the chosen channel, normalized to percentages summing to 100.
SpectrumReport spectrum_report(const std::vector<double>& channel,
                               std::size_t n, std::size_t m_highlight,
                               std::size_t stride = 1);

SpectrumReport spectrum_report(const data::Trajectory& traj,
                               std::size_t channel, std::size_t n,
                               std::size_t m_highlight, std::size_t stride = 1);

// CSV with header mode,density_pct,cumulative_pct
void write_spectrum_csv(const SpectrumReport& rep, const std::string& path);

}  // namespace fcn::spectrum
