#include "fcn/attention.hpp"

#include <cmath>

#include "fcn/model.hpp"
#include "fcn/rng.hpp"

namespace fcn::attention {

namespace {

constexpr double kLnEps = 1e-5;

void affine(double* __restrict__ y, const double* __restrict__ W,
            const double* __restrict__ b, const double* __restrict__ x,
            std::size_t od, std::size_t id) {
    for (std::size_t o = 0; o < od; ++o) {
        const double* __restrict__ wr = W + o * id;
        double acc = b[o];
#pragma omp simd reduction(+ : acc)
        for (std::size_t i = 0; i < id; ++i) acc += wr[i] * x[i];
        y[o] = acc;
    }
}

void layernorm(double* y, const double* g, const double* b, const double* x,
               std::size_t d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<double>(d);
    const double istd = 1.0 / std::sqrt(var + kLnEps);
    for (std::size_t i = 0; i < d; ++i) y[i] = g[i] * (x[i] - mean) * istd + b[i];
}

std::vector<double> rand_affine(std::size_t od, std::size_t id, Rng& rng) {
    std::vector<double> w(od * id);
    const double bound = 1.0 / std::sqrt(static_cast<double>(id));
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return w;
}

// One transformer block applied to a single token given its attention
// context, shared by the step and parallel paths.
void ffn_block(std::vector<double>& h, const AttnLayerParams& lp,
               const AttnConfig& cfg, std::vector<double>& scratch_b,
               std::vector<double>& scratch_u, std::vector<double>& scratch_f) {
    const std::size_t dh = cfg.d_h, ff = cfg.ffn_dim();
    layernorm(scratch_b.data(), lp.ln2_g.data(), lp.ln2_b.data(), h.data(), dh);
    affine(scratch_u.data(), lp.ffn_w1.data(), lp.ffn_b1.data(),
           scratch_b.data(), ff, dh);
    for (std::size_t i = 0; i < ff; ++i) scratch_u[i] = model::gelu(scratch_u[i]);
    affine(scratch_f.data(), lp.ffn_w2.data(), lp.ffn_b2.data(),
           scratch_u.data(), dh, ff);
    for (std::size_t i = 0; i < dh; ++i) h[i] += scratch_f[i];
}

}  // namespace

void AttnConfig::validate() const {
    require(d_s >= 1 && d_a >= 1 && d_h >= 1 && d_q >= 1, "AttnConfig: dims");
    require(L >= 1 && n >= 1 && ffn_mult >= 1, "AttnConfig: L, n, ffn_mult");
}

AttnParams init_attn(const AttnConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    AttnParams p;
    p.cfg = cfg;
    const std::size_t dh = cfg.d_h, ff = cfg.ffn_dim();
    p.enc_w = rand_affine(dh, cfg.d_s, rng);
    p.enc_b.assign(dh, 0.0);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        AttnLayerParams lp;
        lp.ln1_g.assign(dh, 1.0);
        lp.ln1_b.assign(dh, 0.0);
        lp.wq = rand_affine(dh, dh, rng);
        lp.wk = rand_affine(dh, dh, rng);
        lp.wv = rand_affine(dh, dh, rng);
        lp.wo = rand_affine(dh, dh, rng);
        lp.bq.assign(dh, 0.0);
        lp.bk.assign(dh, 0.0);
        lp.bv.assign(dh, 0.0);
        lp.bo.assign(dh, 0.0);
        lp.ln2_g.assign(dh, 1.0);
        lp.ln2_b.assign(dh, 0.0);
        lp.ffn_w1 = rand_affine(ff, dh, rng);
        lp.ffn_b1.assign(ff, 0.0);
        lp.ffn_w2 = rand_affine(dh, ff, rng);
        lp.ffn_b2.assign(dh, 0.0);
        p.layers.push_back(std::move(lp));
    }
    p.dec_w1 = rand_affine(cfg.d_q, dh, rng);
    p.dec_b1.assign(cfg.d_q, 0.0);
    p.dec_w2 = rand_affine(cfg.d_a, cfg.d_q, rng);
    p.dec_b2.assign(cfg.d_a, 0.0);
    return p;
}

AttnStream::AttnStream(const AttnConfig& cfg) {
    cfg.validate();
    caches.assign(cfg.L, KvCache{});
    for (auto& c : caches) {
        c.keys.assign(cfg.n * cfg.d_h, 0.0);
        c.values.assign(cfg.n * cfg.d_h, 0.0);
    }
}

void AttnStream::reset() {
    for (auto& c : caches) {
        c.len = 0;
        c.head = 0;
    }
    steps = 0;
}

std::vector<double> attn_forward_step(const double* x_new, const AttnParams& p,
                                      AttnStream& s) {
    const AttnConfig& cfg = p.cfg;
    const std::size_t dh = cfg.d_h, ff = cfg.ffn_dim(), n = cfg.n;
    for (std::size_t i = 0; i < cfg.d_s; ++i)
        require(std::isfinite(x_new[i]), "attn_forward_step: non-finite input");

    std::vector<double> h(dh), a(dh), q(dh), k(dh), v(dh), ctx(dh), o(dh);
    std::vector<double> sb(dh), su(ff), sf(dh);
    affine(h.data(), p.enc_w.data(), p.enc_b.data(), x_new, dh, cfg.d_s);

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = 0; l < cfg.L; ++l) {
        const AttnLayerParams& lp = p.layers[l];
        KvCache& cache = s.caches[l];
        layernorm(a.data(), lp.ln1_g.data(), lp.ln1_b.data(), h.data(), dh);
        affine(q.data(), lp.wq.data(), lp.bq.data(), a.data(), dh, dh);
        affine(k.data(), lp.wk.data(), lp.bk.data(), a.data(), dh, dh);
        affine(v.data(), lp.wv.data(), lp.bv.data(), a.data(), dh, dh);

        // append (evicting the oldest when the window is full)
        std::size_t slot;
        if (cache.len < n) {
            slot = cache.len++;
        } else {
            slot = cache.head;
            cache.head = (cache.head + 1) % n;
        }
        std::copy(k.begin(), k.end(), cache.keys.begin() + slot * dh);
        std::copy(v.begin(), v.end(), cache.values.begin() + slot * dh);

        // causal softmax over the cached window
        std::vector<double> scores(cache.len);
        double max_score = -1e300;
        for (std::size_t i = 0; i < cache.len; ++i) {
            const double* __restrict__ kr = cache.keys.data() + i * dh;
            double dot = 0.0;
#pragma omp simd reduction(+ : dot)
            for (std::size_t j = 0; j < dh; ++j) dot += q[j] * kr[j];
            scores[i] = dot * scale;
            max_score = std::max(max_score, scores[i]);
        }
        double denom = 0.0;
        for (std::size_t i = 0; i < cache.len; ++i) {
            scores[i] = std::exp(scores[i] - max_score);
            denom += scores[i];
        }
        std::fill(ctx.begin(), ctx.end(), 0.0);
        for (std::size_t i = 0; i < cache.len; ++i) {
            const double w = scores[i] / denom;
            const double* __restrict__ vr = cache.values.data() + i * dh;
#pragma omp simd
            for (std::size_t j = 0; j < dh; ++j) ctx[j] += w * vr[j];
        }
        affine(o.data(), lp.wo.data(), lp.bo.data(), ctx.data(), dh, dh);
        for (std::size_t j = 0; j < dh; ++j) h[j] += o[j];
        ffn_block(h, lp, cfg, sb, su, sf);
    }

    std::vector<double> qh(cfg.d_q), out(cfg.d_a);
    affine(qh.data(), p.dec_w1.data(), p.dec_b1.data(), h.data(), cfg.d_q, dh);
    for (auto& x : qh) x = model::gelu(x);
    affine(out.data(), p.dec_w2.data(), p.dec_b2.data(), qh.data(), cfg.d_a,
           cfg.d_q);
    ++s.steps;
    return out;
}

RealSeq attn_forward_parallel(const RealSeq& x, const AttnParams& p) {
    const AttnConfig& cfg = p.cfg;
    require(x.d == cfg.d_s, "attn_forward_parallel: state dim mismatch");
    const std::size_t T = x.T, dh = cfg.d_h, ff = cfg.ffn_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    RealSeq h(T, dh);
    for (std::size_t t = 0; t < T; ++t)
        affine(h.row(t), p.enc_w.data(), p.enc_b.data(), x.row(t), dh, cfg.d_s);

    std::vector<double> sb(dh), su(ff), sf(dh);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        const AttnLayerParams& lp = p.layers[l];
        RealSeq a(T, dh), q(T, dh), k(T, dh), v(T, dh);
        for (std::size_t t = 0; t < T; ++t) {
            layernorm(a.row(t), lp.ln1_g.data(), lp.ln1_b.data(), h.row(t), dh);
            affine(q.row(t), lp.wq.data(), lp.bq.data(), a.row(t), dh, dh);
            affine(k.row(t), lp.wk.data(), lp.bk.data(), a.row(t), dh, dh);
            affine(v.row(t), lp.wv.data(), lp.bv.data(), a.row(t), dh, dh);
        }
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t lo = (t + 1 >= cfg.n) ? t + 1 - cfg.n : 0;
            std::vector<double> scores(t - lo + 1);
            double max_score = -1e300;
            for (std::size_t i = lo; i <= t; ++i) {
                double dot = 0.0;
#pragma omp simd reduction(+ : dot)
                for (std::size_t j = 0; j < dh; ++j)
                    dot += q.at(t, j) * k.at(i, j);
                scores[i - lo] = dot * scale;
                max_score = std::max(max_score, scores[i - lo]);
            }
            double denom = 0.0;
            for (auto& sc : scores) {
                sc = std::exp(sc - max_score);
                denom += sc;
            }
            std::vector<double> ctx(dh, 0.0), o(dh);
            for (std::size_t i = lo; i <= t; ++i) {
                const double w = scores[i - lo] / denom;
                for (std::size_t j = 0; j < dh; ++j) ctx[j] += w * v.at(i, j);
            }
            affine(o.data(), lp.wo.data(), lp.bo.data(), ctx.data(), dh, dh);
            std::vector<double> hrow(h.row(t), h.row(t) + dh);
            for (std::size_t j = 0; j < dh; ++j) hrow[j] += o[j];
            ffn_block(hrow, lp, cfg, sb, su, sf);
            std::copy(hrow.begin(), hrow.end(), h.row(t));
        }
    }

    RealSeq out(T, cfg.d_a);
    std::vector<double> qh(cfg.d_q);
    for (std::size_t t = 0; t < T; ++t) {
        affine(qh.data(), p.dec_w1.data(), p.dec_b1.data(), h.row(t), cfg.d_q,
               dh);
        for (auto& e : qh) e = model::gelu(e);
        affine(out.row(t), p.dec_w2.data(), p.dec_b2.data(), qh.data(), cfg.d_a,
               cfg.d_q);
    }
    return out;
}

}  // namespace fcn::attention
