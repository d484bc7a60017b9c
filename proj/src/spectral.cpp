#include "fcn/spectral.hpp"

#include <cmath>

namespace fcn::spectral {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

ModeMatrix dft_window(const RealSeq& window, std::size_t m) {
    const std::size_t n = window.T;
    const std::size_t d = window.d;
    require(n >= 1, "dft_window: empty window");
    require(m >= 1 && m <= max_modes(n), "dft_window: mode count out of range");
    ModeMatrix out(m, d, n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -kTwoPi * static_cast<double>(k * i % n) /
                               static_cast<double>(n);
            const Complex w{std::cos(ang), std::sin(ang)};
            const double* row = window.row(i);
            for (std::size_t ch = 0; ch < d; ++ch) out.at(k, ch) += w * row[ch];
        }
    }
    return out;
}

std::vector<Complex> conjugate_extend(const ModeMatrix& y) {
    const std::size_t n = y.n;
    const std::size_t m = y.m;
    const std::size_t d = y.d;
    require(m >= 1 && m <= max_modes(n), "conjugate_extend: bad mode count");
    std::vector<Complex> z(n * d, Complex{0.0, 0.0});
    // Mirror first so the 0 <= k < m rule overwrites the Nyquist overlap.
    for (std::size_t k = (n >= m) ? n - m + 1 : 1; k < n; ++k) {
        const std::size_t src = n - k;
        if (src >= m) continue;
        for (std::size_t ch = 0; ch < d; ++ch)
            z[k * d + ch] = std::conj(y.at(src, ch));
    }
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t ch = 0; ch < d; ++ch) z[k * d + ch] = y.at(k, ch);
    return z;
}

std::vector<Complex> idft_at(const std::vector<Complex>& z, std::size_t n,
                             std::size_t d, std::size_t position) {
    require(n >= 1 && z.size() == n * d, "idft_at: bad spectrum shape");
    require(position < n, "idft_at: position out of range");
    std::vector<Complex> out(d, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = kTwoPi * static_cast<double>(k * position % n) /
                           static_cast<double>(n);
        const Complex w{std::cos(ang), std::sin(ang)};
        for (std::size_t ch = 0; ch < d; ++ch) out[ch] += w * z[k * d + ch];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= inv_n;
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_pow2(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    require(is_pow2(n), "fft_pow2: size must be a power of two");
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const Complex wlen{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            Complex w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                Complex u = a[i + k];
                Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv_n;
    }
}

RfftResult rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    require(n >= 1, "rfft: empty input");
    RfftResult out;
    const std::size_t nb = 1 + n / 2;
    if (is_pow2(n)) {
        std::vector<Complex> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = Complex{x[i], 0.0};
        fft_pow2(a, false);
        out.bins.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(nb));
        out.fast_path = true;
    } else {
        RealSeq w(n, 1);
        for (std::size_t i = 0; i < n; ++i) w.at(i, 0) = x[i];
        ModeMatrix mm = dft_window(w, nb);
        out.bins.resize(nb);
        for (std::size_t k = 0; k < nb; ++k) out.bins[k] = mm.at(k, 0);
        out.fast_path = false;
    }
    return out;
}

std::vector<double> irfft(const std::vector<Complex>& bins, std::size_t n) {
    require(bins.size() == 1 + n / 2, "irfft: bin count does not match n");
    ModeMatrix mm(bins.size(), 1, n);
    for (std::size_t k = 0; k < bins.size(); ++k) mm.at(k, 0) = bins[k];
    std::vector<Complex> z = conjugate_extend(mm);
    std::vector<double> out(n, 0.0);
    if (is_pow2(n)) {
        fft_pow2(z, true);
        for (std::size_t i = 0; i < n; ++i) out[i] = z[i].real();
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = idft_at(z, n, 1, i)[0].real();
    }
    return out;
}

std::vector<Complex> fft_linear_convolve(const std::vector<Complex>& a,
                                         const std::vector<Complex>& b) {
    require(!a.empty() && !b.empty(), "fft_linear_convolve: empty operand");
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t L = next_pow2(out_len);
    std::vector<Complex> fa(L, Complex{0.0, 0.0}), fb(L, Complex{0.0, 0.0});
    std::copy(a.begin(), a.end(), fa.begin());
    std::copy(b.begin(), b.end(), fb.begin());
    fft_pow2(fa, false);
    fft_pow2(fb, false);
    for (std::size_t i = 0; i < L; ++i) fa[i] *= fb[i];
    fft_pow2(fa, true);
    fa.resize(out_len);
    return fa;
}

}  // namespace fcn::spectral
