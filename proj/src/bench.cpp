#include "fcn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "fcn/attention.hpp"
#include "fcn/model.hpp"
#include "fcn/rng.hpp"

namespace fcn::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kBenchDs = 32;
constexpr std::size_t kBenchDa = 8;

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(
        q * static_cast<double>(v.size() - 1) + 0.5);
    return v[std::min(idx, v.size() - 1)];
}

template <typename StepFn>
LatencyRow run_rows(const std::string& name, std::size_t n, std::size_t L,
                    std::size_t d_h, std::size_t warmup, std::size_t samples,
                    Rng& rng, StepFn&& step) {
    std::vector<double> input(kBenchDs);
    volatile double sink = 0.0;
    for (std::size_t i = 0; i < warmup; ++i) {
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        sink = sink + step(input.data())[0];
    }
    std::vector<double> lat(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        const auto t0 = Clock::now();
        const auto out = step(input.data());
        const auto t1 = Clock::now();
        sink = sink + out[0];
        lat[i] = std::chrono::duration<double>(t1 - t0).count();
    }
    (void)sink;
    double mean = 0.0;
    for (double v : lat) mean += v;
    mean /= static_cast<double>(samples);
    return {name, n, L, d_h, mean, percentile(lat, 0.99), samples};
}

}  // namespace

std::vector<LatencyRow> bench_latency(const LatencyGrid& grid) {
    std::vector<LatencyRow> rows;
    Rng rng(grid.seed);
    for (std::size_t n : grid.ns)
        for (std::size_t L : grid.layer_counts)
            for (std::size_t d_h : grid.d_hs) {
                if (grid.run_fcnet) {
                    model::FcnetConfig cfg;
                    cfg.d_s = kBenchDs;
                    cfg.d_a = kBenchDa;
                    cfg.d_h = d_h;
                    cfg.L = L;
                    cfg.n = n;
                    cfg.m = 0;  // paper heuristic
                    model::FcnetParams p = model::init_params(cfg, grid.seed);
                    model::fold_all_layers(p);
                    model::StreamState state(cfg);
                    rows.push_back(run_rows(
                        "fcnet", n, L, d_h, grid.warmup, grid.samples, rng,
                        [&](const double* x) {
                            return model::forward_step(x, p, state);
                        }));
                }
                if (grid.run_attn) {
                    attention::AttnConfig cfg;
                    cfg.d_s = kBenchDs;
                    cfg.d_a = kBenchDa;
                    cfg.d_h = d_h;
                    cfg.L = L;
                    cfg.n = n;
                    attention::AttnParams p =
                        attention::init_attn(cfg, grid.seed);
                    attention::AttnStream state(cfg);
                    rows.push_back(run_rows(
                        "attn", n, L, d_h, grid.warmup, grid.samples, rng,
                        [&](const double* x) {
                            return attention::attn_forward_step(x, p, state);
                        }));
                }
            }
    return rows;
}

void write_latency_csv(const std::vector<LatencyRow>& rows,
                       const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    require(os.good(), "write_latency_csv: cannot open " + path);
    os << "model,n,layers,d_h,mean_s,p99_s,samples\n";
    for (const auto& r : rows)
        os << r.model << ',' << r.n << ',' << r.layers << ',' << r.d_h << ','
           << r.mean_s << ',' << r.p99_s << ',' << r.samples << '\n';
    require(os.good(), "write_latency_csv: write failed");
}

std::vector<ParallelCostRow> bench_parallel_forward(
    const std::vector<std::size_t>& Ts, std::size_t n, std::size_t L,
    std::size_t d_h, std::uint64_t seed) {
    model::FcnetConfig cfg;
    cfg.d_s = kBenchDs;
    cfg.d_a = kBenchDa;
    cfg.d_h = d_h;
    cfg.L = L;
    cfg.n = n;
    model::FcnetParams p = model::init_params(cfg, seed);
    Rng rng(seed);
    std::vector<ParallelCostRow> rows;
    for (std::size_t T : Ts) {
        RealSeq x(T, kBenchDs);
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
        model::forward_parallel(x, p);  // warm caches and allocator
        const auto t0 = Clock::now();
        RealSeq y = model::forward_parallel(x, p);
        const auto t1 = Clock::now();
        rows.push_back({T, std::chrono::duration<double>(t1 - t0).count()});
        require(std::isfinite(y.at(0, 0)), "bench_parallel_forward: bad output");
    }
    return rows;
}

}  // namespace fcn::bench
