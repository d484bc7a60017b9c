#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcn/types.hpp"

namespace fcn::bench {

struct LatencyRow {
    std::string model;  // "fcnet" or "attn"
    std::size_t n = 0;
    std::size_t layers = 0;
    std::size_t d_h = 0;
    double mean_s = 0.0;
    double p99_s = 0.0;
    std::size_t samples = 0;
};

struct LatencyGrid {
    std::vector<std::size_t> ns{64, 2048};
    std::vector<std::size_t> layer_counts{4};
    std::vector<std::size_t> d_hs{256};
    std::size_t warmup = 500;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    bool run_fcnet = true;
    bool run_attn = true;
};

// Single-threaded per-step latency over the grid, measured with a monotonic
// clock after the warmup. Inputs are random but deterministic given seed.
std::vector<LatencyRow> bench_latency(const LatencyGrid& grid);

// CSV with header model,n,layers,d_h,mean_s,p99_s,samples
void write_latency_csv(const std::vector<LatencyRow>& rows,
                       const std::string& path);

struct ParallelCostRow {
    std::size_t T = 0;
    double wall_s = 0.0;
};

// Wall time of the whole-stack parallel forward as a function of sequence
// length (training-cost trend).
std::vector<ParallelCostRow> bench_parallel_forward(
    const std::vector<std::size_t>& Ts, std::size_t n, std::size_t L,
    std::size_t d_h, std::uint64_t seed);

}  // namespace fcn::bench
