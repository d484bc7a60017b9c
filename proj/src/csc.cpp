#include "fcn/csc.hpp"

#include <algorithm>
#include <cmath>

#include "fcn/spectral.hpp"

namespace fcn::csc {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

Complex unit_phase(std::size_t num, std::size_t n) {
    const double ang = kTwoPi * static_cast<double>(num % n) /
                       static_cast<double>(n);
    return Complex{std::cos(ang), std::sin(ang)};
}

// Difference sequence f_t = x_t - x_{t-n}, with zero-padded pre-history.
RealSeq diff_seq(const RealSeq& x, std::size_t n) {
    RealSeq f(x.T, x.d);
    for (std::size_t t = 0; t < x.T; ++t)
        for (std::size_t ch = 0; ch < x.d; ++ch)
            f.at(t, ch) = x.at(t, ch) - (t >= n ? x.at(t - n, ch) : 0.0);
    return f;
}

// Real scalar kernel g_tau = (1/n) Re(sum_k v_k u_k^(tau+1)), tau in [0, T).
std::vector<double> fold_kernel(const std::vector<Complex>& v,
                                const CscConfig& cfg, std::size_t T) {
    std::vector<double> g(T, 0.0);
    const double inv_n = 1.0 / static_cast<double>(cfg.n);
    // g is periodic in n; compute one period then tile.
    const std::size_t period = std::min<std::size_t>(cfg.n, T);
    for (std::size_t tau = 0; tau < period; ++tau) {
        Complex s{0.0, 0.0};
        for (std::size_t k = 0; k < cfg.m; ++k)
            s += v[k] * unit_phase(k * (tau + 1), cfg.n);
        g[tau] = inv_n * s.real();
    }
    for (std::size_t tau = period; tau < T; ++tau) g[tau] = g[tau % cfg.n];
    return g;
}

}  // namespace

void CscConfig::validate() const {
    require(n >= 2, "CscConfig: n must be >= 2");
    require(d >= 1, "CscConfig: d must be >= 1");
    require(m >= 1 && m <= max_modes(n), "CscConfig: m out of range");
}

std::vector<Complex> idft_last_coeffs(const CscConfig& cfg) {
    cfg.validate();
    std::vector<Complex> c(cfg.m);
    c[0] = Complex{1.0, 0.0};
    for (std::size_t k = 1; k < cfg.m; ++k) {
        const Complex w = std::conj(unit_phase(k, cfg.n));  // exp(-j2pik/n)
        const bool nyquist = (cfg.n % 2 == 0) && (k == cfg.n / 2);
        c[k] = nyquist ? w : 2.0 * w;  // self-conjugate mode counted once
    }
    return c;
}

TwiddleTable::TwiddleTable(const CscConfig& cfg) : c(idft_last_coeffs(cfg)) {
    u.resize(cfg.m);
    for (std::size_t k = 0; k < cfg.m; ++k) u[k] = unit_phase(k, cfg.n);
}

std::vector<Complex> fold_inference_kernel(const CscWeights& w,
                                           const CscConfig& cfg) {
    cfg.validate();
    require(w.W.size() == cfg.m * cfg.m, "fold_inference_kernel: W shape");
    const std::vector<Complex> c = idft_last_coeffs(cfg);
    std::vector<Complex> v(cfg.m, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < cfg.m; ++k)
        for (std::size_t j = 0; j < cfg.m; ++j) v[j] += c[k] * w.W[k * cfg.m + j];
    return v;
}

CscWeights init_weights(const CscConfig& cfg, Rng& rng) {
    cfg.validate();
    CscWeights w;
    w.W.resize(cfg.m * cfg.m);
    const double bound = 1.0 / static_cast<double>(cfg.m);
    for (auto& e : w.W) {
        const double re = rng.uniform(-bound, bound);
        const double im = rng.uniform(-bound, bound);
        e = Complex{re, im};
    }
    return w;
}

RealSeq forward_direct(const RealSeq& x, const CscWeights& w,
                       const CscConfig& cfg) {
    cfg.validate();
    require(x.d == cfg.d, "forward_direct: channel mismatch");
    require(w.W.size() == cfg.m * cfg.m, "forward_direct: W shape");
    const std::size_t n = cfg.n, m = cfg.m, d = cfg.d;
    RealSeq y(x.T, d);
    RealSeq window(n, d);
    for (std::size_t t = 0; t < x.T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(n) +
                1 + static_cast<std::ptrdiff_t>(i);
            for (std::size_t ch = 0; ch < d; ++ch)
                window.at(i, ch) =
                    (src >= 0) ? x.at(static_cast<std::size_t>(src), ch) : 0.0;
        }
        ModeMatrix xh = spectral::dft_window(window, m);
        ModeMatrix yh(m, d, n);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t j = 0; j < m; ++j) {
                const Complex wkj = w.W[k * m + j];
                for (std::size_t ch = 0; ch < d; ++ch)
                    yh.at(k, ch) += wkj * xh.at(j, ch);
            }
        std::vector<Complex> z = spectral::conjugate_extend(yh);
        std::vector<Complex> out = spectral::idft_at(z, n, d, n - 1);
        for (std::size_t ch = 0; ch < d; ++ch) y.at(t, ch) = out[ch].real();
    }
    return y;
}

std::vector<ModeMatrix> mode_trajectory(const RealSeq& x, const CscConfig& cfg) {
    cfg.validate();
    require(x.d == cfg.d, "mode_trajectory: channel mismatch");
    const std::size_t T = x.T, m = cfg.m, d = cfg.d;
    const RealSeq f = diff_seq(x, cfg.n);
    std::vector<ModeMatrix> xh(T, ModeMatrix(m, d, cfg.n));
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<Complex> a(T);
        for (std::size_t i = 0; i < T; ++i) a[i] = unit_phase(k * (i + 1), cfg.n);
        for (std::size_t ch = 0; ch < d; ++ch) {
            std::vector<Complex> b(T);
            for (std::size_t t = 0; t < T; ++t) b[t] = Complex{f.at(t, ch), 0.0};
            std::vector<Complex> conv = spectral::fft_linear_convolve(a, b);
            for (std::size_t t = 0; t < T; ++t) xh[t].at(k, ch) = conv[t];
        }
    }
    return xh;
}

RealSeq forward_parallel(const RealSeq& x, const CscWeights& w,
                         const CscConfig& cfg) {
    require(w.W.size() == cfg.m * cfg.m, "forward_parallel: W shape");
    const std::vector<Complex> v = fold_inference_kernel(w, cfg);
    const std::vector<ModeMatrix> xh = mode_trajectory(x, cfg);
    const double inv_n = 1.0 / static_cast<double>(cfg.n);
    RealSeq y(x.T, cfg.d);
    for (std::size_t t = 0; t < x.T; ++t)
        for (std::size_t ch = 0; ch < cfg.d; ++ch) {
            Complex s{0.0, 0.0};
            for (std::size_t k = 0; k < cfg.m; ++k) s += v[k] * xh[t].at(k, ch);
            y.at(t, ch) = inv_n * s.real();
        }
    return y;
}

RealSeq forward_fused(const RealSeq& x, const CscWeights& w,
                      const CscConfig& cfg) {
    cfg.validate();
    require(x.d == cfg.d, "forward_fused: channel mismatch");
    require(w.W.size() == cfg.m * cfg.m, "forward_fused: W shape");
    const std::size_t T = x.T, d = cfg.d, n = cfg.n;
    const std::vector<Complex> v = fold_inference_kernel(w, cfg);
    const std::vector<double> g = fold_kernel(v, cfg, std::min(n, T));
    const RealSeq f = diff_seq(x, n);
    // g is periodic in n, so the full convolution telescopes into
    // y_t = y_{t-n} + sum_{tau<n} g_tau f_{t-tau}: O(T n) per channel,
    // all real arithmetic, channels vectorized in the inner loop.
    RealSeq y(T, d);
    for (std::size_t t = 0; t < T; ++t) {
        double* yr = y.row(t);
        if (t >= n) {
            const double* prev = y.row(t - n);
            for (std::size_t ch = 0; ch < d; ++ch) yr[ch] = prev[ch];
        }
        const std::size_t taus = std::min(t + 1, n);
        for (std::size_t tau = 0; tau < taus; ++tau) {
            const double gt = g[tau];
            const double* fr = f.row(t - tau);
            for (std::size_t ch = 0; ch < d; ++ch) yr[ch] += gt * fr[ch];
        }
    }
    return y;
}

CscStreamCache::CscStreamCache(const CscConfig& cfg)
    : spectrum(cfg.m, cfg.d, cfg.n), ring(cfg.n * cfg.d, 0.0) {
    cfg.validate();
}

void CscStreamCache::reset() {
    std::fill(spectrum.modes.begin(), spectrum.modes.end(), Complex{0.0, 0.0});
    std::fill(ring.begin(), ring.end(), 0.0);
    head = 0;
    steps = 0;
}

double CscStreamCache::spectrum_drift(const CscConfig& cfg) const {
    // Ring in arrival order: oldest entry is at head.
    RealSeq window(cfg.n, cfg.d);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const std::size_t slot = (head + i) % cfg.n;
        for (std::size_t ch = 0; ch < cfg.d; ++ch)
            window.at(i, ch) = ring[slot * cfg.d + ch];
    }
    ModeMatrix fresh = spectral::dft_window(window, cfg.m);
    double drift = 0.0;
    for (std::size_t i = 0; i < fresh.modes.size(); ++i)
        drift = std::max(drift, std::abs(fresh.modes[i] - spectrum.modes[i]));
    return drift;
}

std::vector<double> forward_step(const double* x_new, const CscWeights& w,
                                 CscStreamCache& cache, const CscConfig& cfg) {
    const std::size_t m = cfg.m, d = cfg.d;
    require(w.W.size() == m * m, "forward_step: W shape");
    for (std::size_t ch = 0; ch < d; ++ch)
        require(std::isfinite(x_new[ch]), "forward_step: non-finite input");
    std::vector<Complex> vloc;
    const std::vector<Complex>* vp = &w.folded;
    if (w.folded.empty()) {
        vloc = fold_inference_kernel(w, cfg);
        vp = &vloc;
    }
    double* old_row = cache.ring.data() + cache.head * d;
    std::vector<double> y(d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(cfg.n);
    for (std::size_t k = 0; k < m; ++k) {
        const Complex uk = unit_phase(k, cfg.n);
        const Complex vk = (*vp)[k];
        for (std::size_t ch = 0; ch < d; ++ch) {
            const Complex updated =
                uk * (cache.spectrum.at(k, ch) + (x_new[ch] - old_row[ch]));
            cache.spectrum.at(k, ch) = updated;
            y[ch] += (vk * updated).real();
        }
    }
    for (std::size_t ch = 0; ch < d; ++ch) {
        old_row[ch] = x_new[ch];
        y[ch] *= inv_n;
    }
    cache.head = (cache.head + 1) % cfg.n;
    ++cache.steps;
    return y;
}

CscGradients backward(const RealSeq& x, const CscWeights& w,
                      const CscConfig& cfg, const RealSeq& dL_dy) {
    cfg.validate();
    require(x.d == cfg.d && dL_dy.d == cfg.d && dL_dy.T == x.T,
            "backward: shape mismatch");
    require(w.W.size() == cfg.m * cfg.m, "backward: W shape");
    const std::size_t T = x.T, m = cfg.m, d = cfg.d, n = cfg.n;
    const double inv_n = 1.0 / static_cast<double>(n);

    const RealSeq f = diff_seq(x, n);
    const std::vector<Complex> v = fold_inference_kernel(w, cfg);
    const std::vector<double> g = fold_kernel(v, cfg, std::min(n, T));

    CscGradients out;
    out.dx = RealSeq(T, d);
    out.dW_re.assign(m * m, 0.0);
    out.dW_im.assign(m * m, 0.0);

    // dL/df[s] = sum_{t>=s} g[t-s] * G[t]  (adjoint correlation); g is
    // periodic in n, so df[s] = df[s+n] + sum_{tau<n} g_tau G[s+tau].
    // Then dL/dx[t] = dL/df[t] - dL/df[t+n].
    RealSeq df(T, d);
    for (std::size_t s = T; s-- > 0;) {
        double* dfr = df.row(s);
        if (s + n < T) {
            const double* next = df.row(s + n);
            for (std::size_t ch = 0; ch < d; ++ch) dfr[ch] = next[ch];
        }
        const std::size_t taus = std::min(T - s, n);
        for (std::size_t tau = 0; tau < taus; ++tau) {
            const double gt = g[tau];
            const double* Gr = dL_dy.row(s + tau);
            for (std::size_t ch = 0; ch < d; ++ch) dfr[ch] += gt * Gr[ch];
        }
    }
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t ch = 0; ch < d; ++ch)
            out.dx.at(t, ch) =
                df.at(t, ch) - (t + n < T ? df.at(t + n, ch) : 0.0);

    // r[tau] = sum_{ch,s} f[s] * G[s+tau]; M_j = sum_tau u_j^(tau+1) r[tau].
    // u is periodic in n, so only tau mod n matters: fold r through the
    // n-strided prefix F[q] = f[q] + F[q-n], giving
    // rfold[p] = sum_{t>=p} G[t] . F[t-p].
    // dW_re[k][j] = (1/n) Re(c_k M_j), dW_im[k][j] = -(1/n) Im(c_k M_j).
    RealSeq F = f;
    for (std::size_t q = n; q < T; ++q) {
        double* Fr = F.row(q);
        const double* prev = F.row(q - n);
        for (std::size_t ch = 0; ch < d; ++ch) Fr[ch] += prev[ch];
    }
    const std::size_t period = std::min(n, T);
    std::vector<double> rfold(period, 0.0);
    for (std::size_t p = 0; p < period; ++p) {
        double acc = 0.0;
        for (std::size_t t = p; t < T; ++t) {
            const double* Gr = dL_dy.row(t);
            const double* Fr = F.row(t - p);
            for (std::size_t ch = 0; ch < d; ++ch) acc += Gr[ch] * Fr[ch];
        }
        rfold[p] = acc;
    }
    const std::vector<Complex> c = idft_last_coeffs(cfg);
    for (std::size_t j = 0; j < m; ++j) {
        Complex M{0.0, 0.0};
        for (std::size_t tau = 0; tau < period; ++tau)
            M += unit_phase(j * (tau + 1), n) * rfold[tau];
        for (std::size_t k = 0; k < m; ++k) {
            const Complex cm = c[k] * M;
            out.dW_re[k * m + j] = inv_n * cm.real();
            out.dW_im[k * m + j] = -inv_n * cm.imag();
        }
    }
    return out;
}

}  // namespace fcn::csc
