#include "fcn/model.hpp"

#include <cmath>

#include "fcn/rng.hpp"

namespace fcn::model {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void affine_seq(RealSeq& out, const double* __restrict__ W,
                const double* __restrict__ b, const RealSeq& in,
                std::size_t od, std::size_t id) {
    // Rows are processed four at a time so each weight row is loaded once
    // per block and the four dot products run on independent FMA chains.
    std::size_t t = 0;
    for (; t + 4 <= in.T; t += 4) {
        const double* __restrict__ x0 = in.row(t);
        const double* __restrict__ x1 = in.row(t + 1);
        const double* __restrict__ x2 = in.row(t + 2);
        const double* __restrict__ x3 = in.row(t + 3);
        double* __restrict__ y0 = out.row(t);
        double* __restrict__ y1 = out.row(t + 1);
        double* __restrict__ y2 = out.row(t + 2);
        double* __restrict__ y3 = out.row(t + 3);
        for (std::size_t o = 0; o < od; ++o) {
            const double* __restrict__ wr = W + o * id;
            double a0 = b[o], a1 = b[o], a2 = b[o], a3 = b[o];
#pragma omp simd reduction(+ : a0, a1, a2, a3)
            for (std::size_t i = 0; i < id; ++i) {
                const double w = wr[i];
                a0 += w * x0[i];
                a1 += w * x1[i];
                a2 += w * x2[i];
                a3 += w * x3[i];
            }
            y0[o] = a0;
            y1[o] = a1;
            y2[o] = a2;
            y3[o] = a3;
        }
    }
    for (; t < in.T; ++t) {
        const double* __restrict__ x = in.row(t);
        double* __restrict__ y = out.row(t);
        for (std::size_t o = 0; o < od; ++o) {
            const double* __restrict__ wr = W + o * id;
            double acc = b[o];
#pragma omp simd reduction(+ : acc)
            for (std::size_t i = 0; i < id; ++i) acc += wr[i] * x[i];
            y[o] = acc;
        }
    }
}

// dX = W^T dY; dW += dY x^T; db += dY
void affine_backward(const double* __restrict__ W, const RealSeq& in,
                     const RealSeq& dout, std::size_t od, std::size_t id,
                     RealSeq* din, double* __restrict__ dW,
                     double* __restrict__ db) {
    // Four rows per block: each dW row is read/written once per block
    // instead of once per row, which is where most of the memory traffic is.
    std::size_t t = 0;
    for (; t + 4 <= in.T; t += 4) {
        const double* __restrict__ x0 = in.row(t);
        const double* __restrict__ x1 = in.row(t + 1);
        const double* __restrict__ x2 = in.row(t + 2);
        const double* __restrict__ x3 = in.row(t + 3);
        const double* __restrict__ g0 = dout.row(t);
        const double* __restrict__ g1 = dout.row(t + 1);
        const double* __restrict__ g2 = dout.row(t + 2);
        const double* __restrict__ g3 = dout.row(t + 3);
        for (std::size_t o = 0; o < od; ++o) {
            const double go0 = g0[o], go1 = g1[o], go2 = g2[o], go3 = g3[o];
            const double* __restrict__ wr = W + o * id;
            double* __restrict__ dwr = dW + o * id;
            db[o] += go0 + go1 + go2 + go3;
            if (din) {
                double* __restrict__ dx0 = din->row(t);
                double* __restrict__ dx1 = din->row(t + 1);
                double* __restrict__ dx2 = din->row(t + 2);
                double* __restrict__ dx3 = din->row(t + 3);
#pragma omp simd
                for (std::size_t i = 0; i < id; ++i) {
                    dwr[i] += go0 * x0[i] + go1 * x1[i] + go2 * x2[i] +
                              go3 * x3[i];
                    const double w = wr[i];
                    dx0[i] += w * go0;
                    dx1[i] += w * go1;
                    dx2[i] += w * go2;
                    dx3[i] += w * go3;
                }
            } else {
#pragma omp simd
                for (std::size_t i = 0; i < id; ++i)
                    dwr[i] += go0 * x0[i] + go1 * x1[i] + go2 * x2[i] +
                              go3 * x3[i];
            }
        }
    }
    for (; t < in.T; ++t) {
        const double* __restrict__ x = in.row(t);
        const double* __restrict__ g = dout.row(t);
        double* __restrict__ dx = din ? din->row(t) : nullptr;
        for (std::size_t o = 0; o < od; ++o) {
            const double go = g[o];
            const double* __restrict__ wr = W + o * id;
            double* __restrict__ dwr = dW + o * id;
            db[o] += go;
            if (dx) {
#pragma omp simd
                for (std::size_t i = 0; i < id; ++i) {
                    dwr[i] += go * x[i];
                    dx[i] += wr[i] * go;
                }
            } else {
#pragma omp simd
                for (std::size_t i = 0; i < id; ++i) dwr[i] += go * x[i];
            }
        }
    }
}

void layernorm_seq(RealSeq& out, const double* gamma, const double* beta,
                   const RealSeq& in, std::vector<double>* means,
                   std::vector<double>* istds) {
    const std::size_t d = in.d;
    if (means) means->resize(in.T);
    if (istds) istds->resize(in.T);
    for (std::size_t t = 0; t < in.T; ++t) {
        const double* x = in.row(t);
        double* y = out.row(t);
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
        for (std::size_t i = 0; i < d; ++i)
            y[i] = gamma[i] * (x[i] - mean) * istd + beta[i];
        if (means) (*means)[t] = mean;
        if (istds) (*istds)[t] = istd;
    }
}

void layernorm_backward(const double* gamma, const RealSeq& in,
                        const std::vector<double>& means,
                        const std::vector<double>& istds, const RealSeq& dout,
                        RealSeq& din, double* dgamma, double* dbeta) {
    const std::size_t d = in.d;
    std::vector<double> dxhat(d);
    for (std::size_t t = 0; t < in.T; ++t) {
        const double* x = in.row(t);
        const double* g = dout.row(t);
        double* dx = din.row(t);
        const double mean = means[t];
        const double istd = istds[t];
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double xhat = (x[i] - mean) * istd;
            dgamma[i] += g[i] * xhat;
            dbeta[i] += g[i];
            dxhat[i] = g[i] * gamma[i];
            sum_dxhat += dxhat[i];
            sum_dxhat_xhat += dxhat[i] * xhat;
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double xhat = (x[i] - mean) * istd;
            dx[i] += istd * (dxhat[i] - inv_d * sum_dxhat -
                             xhat * inv_d * sum_dxhat_xhat);
        }
    }
}

void gelu_seq(RealSeq& out, const RealSeq& in) {
    for (std::size_t i = 0; i < in.data.size(); ++i)
        out.data[i] = gelu(in.data[i]);
}

std::string layer_prefix(std::size_t l) { return "layer" + std::to_string(l); }

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

std::size_t suggest_modes(std::size_t n) {
    require(n >= 2, "suggest_modes: n must be >= 2");
    const auto by_log = static_cast<std::size_t>(
        std::floor(2.5 * std::log(static_cast<double>(n))));
    const std::size_t cap = n / 2 + 1;
    return std::max<std::size_t>(1, std::min(by_log, cap));
}

void FcnetConfig::validate() const {
    require(d_s >= 1 && d_a >= 1 && d_h >= 1 && d_q >= 1, "FcnetConfig: dims");
    require(L >= 1, "FcnetConfig: L must be >= 1");
    require(ffn_mult >= 1, "FcnetConfig: ffn_mult must be >= 1");
    csc_config().validate();
}

ParamLayout ParamLayout::build(const FcnetConfig& cfg) {
    ParamLayout lay;
    auto add = [&](const std::string& name, std::size_t count,
                   std::size_t fan_in) {
        lay.tensors.push_back({name, lay.total, count, fan_in});
        lay.total += count;
    };
    const std::size_t dh = cfg.d_h, ff = cfg.ffn_dim(), m = cfg.modes();
    add("P.w", dh * cfg.d_s, cfg.d_s);
    add("P.b", dh, 0);
    for (std::size_t l = 0; l < cfg.L; ++l) {
        const std::string p = layer_prefix(l);
        add(p + ".ln1.g", dh, 0);
        add(p + ".ln1.b", dh, 0);
        add(p + ".csc.re", m * m, 0);
        add(p + ".csc.im", m * m, 0);
        add(p + ".ln2.g", dh, 0);
        add(p + ".ln2.b", dh, 0);
        add(p + ".ffn.w1", ff * dh, dh);
        add(p + ".ffn.b1", ff, 0);
        add(p + ".ffn.w2", dh * ff, ff);
        add(p + ".ffn.b2", dh, 0);
    }
    add("Q.w1", cfg.d_q * dh, dh);
    add("Q.b1", cfg.d_q, 0);
    add("Q.w2", cfg.d_a * cfg.d_q, cfg.d_q);
    add("Q.b2", cfg.d_a, 0);
    return lay;
}

const TensorSpec& ParamLayout::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw std::invalid_argument("ParamLayout: unknown tensor " + name);
}

csc::CscWeights FcnetParams::csc_weights(std::size_t layer) const {
    const std::size_t m = cfg.modes();
    const double* re = tensor(layer_prefix(layer) + ".csc.re");
    const double* im = tensor(layer_prefix(layer) + ".csc.im");
    csc::CscWeights w;
    w.W.resize(m * m);
    for (std::size_t i = 0; i < m * m; ++i) w.W[i] = Complex{re[i], im[i]};
    if (layer < folded.size()) w.folded = folded[layer];
    return w;
}

FcnetParams init_params(const FcnetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    FcnetParams p;
    p.cfg = cfg;
    p.layout = ParamLayout::build(cfg);
    p.flat.assign(p.layout.total, 0.0);
    Rng rng(seed);
    const double csc_bound = 1.0 / static_cast<double>(cfg.modes());
    for (const auto& spec : p.layout.tensors) {
        double* dst = p.flat.data() + spec.offset;
        if (spec.fan_in > 0) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
            for (std::size_t i = 0; i < spec.count; ++i)
                dst[i] = rng.uniform(-bound, bound);
        } else if (spec.name.find(".csc.") != std::string::npos) {
            for (std::size_t i = 0; i < spec.count; ++i)
                dst[i] = rng.uniform(-csc_bound, csc_bound);
        } else if (spec.name.ends_with(".ln1.g") || spec.name.ends_with(".ln2.g")) {
            for (std::size_t i = 0; i < spec.count; ++i) dst[i] = 1.0;
        }
        // biases and LayerNorm shifts stay 0
    }
    return p;
}

void fold_all_layers(FcnetParams& p) {
    p.folded.resize(p.cfg.L);
    const csc::CscConfig ccfg = p.cfg.csc_config();
    for (std::size_t l = 0; l < p.cfg.L; ++l) {
        csc::CscWeights w = p.csc_weights(l);
        p.folded[l] = csc::fold_inference_kernel(w, ccfg);
    }
}

static RealSeq forward_impl(const RealSeq& x, const FcnetParams& p, Tape* tape) {
    const FcnetConfig& cfg = p.cfg;
    require(x.d == cfg.d_s, "forward_parallel: state dim mismatch");
    require(x.T >= 1, "forward_parallel: empty sequence");
    const std::size_t T = x.T, dh = cfg.d_h, ff = cfg.ffn_dim();
    const csc::CscConfig ccfg = cfg.csc_config();

    RealSeq h(T, dh);
    affine_seq(h, p.tensor("P.w"), p.tensor("P.b"), x, dh, cfg.d_s);
    if (tape) {
        tape->x0 = x;
        tape->h1 = h;
        tape->layers.assign(cfg.L, LayerTape{});
    }

    for (std::size_t l = 0; l < cfg.L; ++l) {
        const std::string pre = layer_prefix(l);
        LayerTape* lt = tape ? &tape->layers[l] : nullptr;
        if (lt) lt->h_in = h;

        RealSeq a(T, dh);
        layernorm_seq(a, p.tensor(pre + ".ln1.g"), p.tensor(pre + ".ln1.b"), h,
                      lt ? &lt->ln1_mean : nullptr, lt ? &lt->ln1_istd : nullptr);
        if (lt) lt->ln1_out = a;

        RealSeq c = csc::forward_fused(a, p.csc_weights(l), ccfg);
        if (lt) lt->csc_out = c;

        RealSeq g(T, dh);
        gelu_seq(g, c);
        RealSeq y(T, dh);
        for (std::size_t i = 0; i < y.data.size(); ++i)
            y.data[i] = g.data[i] + h.data[i];
        if (lt) lt->y = y;

        RealSeq b(T, dh);
        layernorm_seq(b, p.tensor(pre + ".ln2.g"), p.tensor(pre + ".ln2.b"), y,
                      lt ? &lt->ln2_mean : nullptr, lt ? &lt->ln2_istd : nullptr);
        if (lt) lt->ln2_out = b;

        RealSeq u(T, ff);
        affine_seq(u, p.tensor(pre + ".ffn.w1"), p.tensor(pre + ".ffn.b1"), b,
                   ff, dh);
        if (lt) lt->ffn_hidden = u;
        RealSeq v(T, ff);
        gelu_seq(v, u);
        RealSeq f(T, dh);
        affine_seq(f, p.tensor(pre + ".ffn.w2"), p.tensor(pre + ".ffn.b2"), v,
                   dh, ff);
        for (std::size_t i = 0; i < h.data.size(); ++i)
            h.data[i] = f.data[i] + y.data[i];
    }

    RealSeq qh(T, cfg.d_q);
    affine_seq(qh, p.tensor("Q.w1"), p.tensor("Q.b1"), h, cfg.d_q, dh);
    RealSeq qg(T, cfg.d_q);
    gelu_seq(qg, qh);
    RealSeq out(T, cfg.d_a);
    affine_seq(out, p.tensor("Q.w2"), p.tensor("Q.b2"), qg, cfg.d_a, cfg.d_q);
    if (tape) {
        tape->h_last = h;
        tape->q_hidden = qh;
        tape->out = out;
    }
    return out;
}

RealSeq forward_parallel(const RealSeq& x, const FcnetParams& p) {
    return forward_impl(x, p, nullptr);
}

RealSeq forward_parallel_tape(const RealSeq& x, const FcnetParams& p,
                              Tape& tape) {
    return forward_impl(x, p, &tape);
}

void backward_from_tape(const FcnetParams& p, const Tape& tape,
                        const RealSeq& dL_dout, std::vector<double>& grad) {
    const FcnetConfig& cfg = p.cfg;
    require(grad.size() == p.layout.total, "backward_from_tape: grad size");
    const std::size_t T = dL_dout.T, dh = cfg.d_h, ff = cfg.ffn_dim();
    const csc::CscConfig ccfg = cfg.csc_config();
    auto g = [&](const std::string& name) {
        return grad.data() + p.layout.find(name).offset;
    };

    // Decoder Q
    RealSeq qg(T, cfg.d_q);
    for (std::size_t i = 0; i < qg.data.size(); ++i)
        qg.data[i] = gelu(tape.q_hidden.data[i]);
    RealSeq dqg(T, cfg.d_q);
    affine_backward(p.tensor("Q.w2"), qg, dL_dout, cfg.d_a, cfg.d_q, &dqg,
                    g("Q.w2"), g("Q.b2"));
    RealSeq dqh(T, cfg.d_q);
    for (std::size_t i = 0; i < dqh.data.size(); ++i)
        dqh.data[i] = dqg.data[i] * gelu_grad(tape.q_hidden.data[i]);
    RealSeq dh_seq(T, dh);
    affine_backward(p.tensor("Q.w1"), tape.h_last, dqh, cfg.d_q, dh, &dh_seq,
                    g("Q.w1"), g("Q.b1"));

    for (std::size_t li = cfg.L; li-- > 0;) {
        const LayerTape& lt = tape.layers[li];
        const std::string pre = layer_prefix(li);

        // h_next = f + y  (FFN output plus residual)
        RealSeq dy = dh_seq;  // residual branch
        RealSeq v(T, ff);
        for (std::size_t i = 0; i < v.data.size(); ++i)
            v.data[i] = gelu(lt.ffn_hidden.data[i]);
        RealSeq dv(T, ff);
        affine_backward(p.tensor(pre + ".ffn.w2"), v, dh_seq, dh, ff, &dv,
                        g(pre + ".ffn.w2"), g(pre + ".ffn.b2"));
        RealSeq du(T, ff);
        for (std::size_t i = 0; i < du.data.size(); ++i)
            du.data[i] = dv.data[i] * gelu_grad(lt.ffn_hidden.data[i]);
        RealSeq db(T, dh);
        affine_backward(p.tensor(pre + ".ffn.w1"), lt.ln2_out, du, ff, dh, &db,
                        g(pre + ".ffn.w1"), g(pre + ".ffn.b1"));
        layernorm_backward(p.tensor(pre + ".ln2.g"), lt.y, lt.ln2_mean,
                           lt.ln2_istd, db, dy, g(pre + ".ln2.g"),
                           g(pre + ".ln2.b"));

        // y = gelu(csc(a)) + h_in
        RealSeq dh_in = dy;  // residual branch
        RealSeq dc(T, dh);
        for (std::size_t i = 0; i < dc.data.size(); ++i)
            dc.data[i] = dy.data[i] * gelu_grad(lt.csc_out.data[i]);
        csc::CscGradients cg = csc::backward(lt.ln1_out, p.csc_weights(li),
                                             ccfg, dc);
        {
            double* dre = g(pre + ".csc.re");
            double* dim = g(pre + ".csc.im");
            for (std::size_t i = 0; i < cg.dW_re.size(); ++i) {
                dre[i] += cg.dW_re[i];
                dim[i] += cg.dW_im[i];
            }
        }
        layernorm_backward(p.tensor(pre + ".ln1.g"), lt.h_in, lt.ln1_mean,
                           lt.ln1_istd, cg.dx, dh_in, g(pre + ".ln1.g"),
                           g(pre + ".ln1.b"));
        dh_seq = dh_in;
    }

    affine_backward(p.tensor("P.w"), tape.x0, dh_seq, dh, cfg.d_s, nullptr,
                    g("P.w"), g("P.b"));
}

StreamState::StreamState(const FcnetConfig& cfg) {
    cfg.validate();
    caches.assign(cfg.L, csc::CscStreamCache(cfg.csc_config()));
}

void reset_stream(StreamState& s) {
    for (auto& c : s.caches) c.reset();
    s.steps = 0;
}

std::vector<double> forward_step(const double* x_new, const FcnetParams& p,
                                 StreamState& s) {
    const FcnetConfig& cfg = p.cfg;
    require(s.caches.size() == cfg.L, "forward_step: state/config mismatch");
    const std::size_t dh = cfg.d_h, ff = cfg.ffn_dim();
    const csc::CscConfig ccfg = cfg.csc_config();
    for (std::size_t i = 0; i < cfg.d_s; ++i)
        require(std::isfinite(x_new[i]), "forward_step: non-finite input");

    RealSeq xrow(1, cfg.d_s);
    for (std::size_t i = 0; i < cfg.d_s; ++i) xrow.at(0, i) = x_new[i];
    RealSeq h(1, dh);
    affine_seq(h, p.tensor("P.w"), p.tensor("P.b"), xrow, dh, cfg.d_s);

    for (std::size_t l = 0; l < cfg.L; ++l) {
        const std::string pre = layer_prefix(l);
        RealSeq a(1, dh);
        layernorm_seq(a, p.tensor(pre + ".ln1.g"), p.tensor(pre + ".ln1.b"), h,
                      nullptr, nullptr);
        csc::CscWeights w = p.csc_weights(l);
        std::vector<double> c = csc::forward_step(a.row(0), w, s.caches[l], ccfg);
        RealSeq y(1, dh);
        for (std::size_t i = 0; i < dh; ++i)
            y.at(0, i) = gelu(c[i]) + h.at(0, i);
        RealSeq b(1, dh);
        layernorm_seq(b, p.tensor(pre + ".ln2.g"), p.tensor(pre + ".ln2.b"), y,
                      nullptr, nullptr);
        RealSeq u(1, ff);
        affine_seq(u, p.tensor(pre + ".ffn.w1"), p.tensor(pre + ".ffn.b1"), b,
                   ff, dh);
        RealSeq v(1, ff);
        gelu_seq(v, u);
        RealSeq f(1, dh);
        affine_seq(f, p.tensor(pre + ".ffn.w2"), p.tensor(pre + ".ffn.b2"), v,
                   dh, ff);
        for (std::size_t i = 0; i < dh; ++i) h.at(0, i) = f.at(0, i) + y.at(0, i);
    }

    RealSeq qh(1, cfg.d_q);
    affine_seq(qh, p.tensor("Q.w1"), p.tensor("Q.b1"), h, cfg.d_q, dh);
    RealSeq qg(1, cfg.d_q);
    gelu_seq(qg, qh);
    RealSeq out(1, cfg.d_a);
    affine_seq(out, p.tensor("Q.w2"), p.tensor("Q.b2"), qg, cfg.d_a, cfg.d_q);
    ++s.steps;
    return std::vector<double>(out.data.begin(), out.data.end());
}

}  // namespace fcn::model
