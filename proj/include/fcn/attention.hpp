#pragma once

#include <cstdint>
#include <vector>

#include "fcn/types.hpp"

namespace fcn::attention {

// Single-head causal attention comparator with sliding-window KV eviction at
// n, wrapped in the same LayerNorm/FFN/residual stack shape as FCNet so the
// per-layer latency comparison is like-for-like.
struct AttnConfig {
    std::size_t d_s = 0;
    std::size_t d_a = 0;
    std::size_t d_h = 128;
    std::size_t d_q = 128;
    std::size_t L = 4;
    std::size_t n = 64;  // KV window
    std::size_t ffn_mult = 2;
    std::size_t ffn_dim() const { return ffn_mult * d_h; }
    void validate() const;
};

struct AttnLayerParams {
    std::vector<double> ln1_g, ln1_b;
    std::vector<double> wq, wk, wv, wo;  // d_h x d_h row-major
    std::vector<double> bq, bk, bv, bo;
    std::vector<double> ln2_g, ln2_b;
    std::vector<double> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct AttnParams {
    AttnConfig cfg;
    std::vector<double> enc_w, enc_b;  // d_h x d_s
    std::vector<AttnLayerParams> layers;
    std::vector<double> dec_w1, dec_b1, dec_w2, dec_b2;
};

AttnParams init_attn(const AttnConfig& cfg, std::uint64_t seed);

// Growing-then-sliding KV cache, capacity n per layer.
struct KvCache {
    std::vector<double> keys;    // len x d_h ring
    std::vector<double> values;  // len x d_h ring
    std::size_t len = 0;
    std::size_t head = 0;  // oldest entry when len == capacity
};

struct AttnStream {
    std::vector<KvCache> caches;
    std::size_t steps = 0;
    explicit AttnStream(const AttnConfig& cfg);
    void reset();
};

// KV-cached single-token pass; per-step cost O(len * d_h + d_h^2) per layer.
std::vector<double> attn_forward_step(const double* x_new, const AttnParams& p,
                                      AttnStream& s);

// Whole-sequence causal attention with window n; the oracle for the step
// path.
RealSeq attn_forward_parallel(const RealSeq& x, const AttnParams& p);

}  // namespace fcn::attention
