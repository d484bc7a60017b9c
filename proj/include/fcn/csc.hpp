#pragma once

#include <cstddef>
#include <vector>

#include "fcn/rng.hpp"
#include "fcn/types.hpp"

namespace fcn::csc {

struct CscConfig {
    std::size_t n = 0;  // window length
    std::size_t m = 0;  // retained mode count, 1 <= m <= 1 + n/2
    std::size_t d = 0;  // channel count

    void validate() const;
};

struct CscWeights {
    // m x m complex mode-mixing matrix, row-major.
    std::vector<Complex> W;
    // Folded inference vector v = c^T W; empty until folded.
    std::vector<Complex> folded;
};

// Per-mode coefficients of the IDFT evaluated at the last window position,
// after conjugate extension: c_0 = 1, c_k = 2*exp(-j*2*pi*k/n) for interior
// modes, and the self-conjugate Nyquist mode gets weight 1 (value -1).
std::vector<Complex> idft_last_coeffs(const CscConfig& cfg);

// Sliding-DFT twiddles u_k = exp(j*2*pi*k/n) plus the c coefficients above.
struct TwiddleTable {
    std::vector<Complex> u;  // m entries, unit modulus
    std::vector<Complex> c;  // m entries
    explicit TwiddleTable(const CscConfig& cfg);
};

// v = c^T W, collapsing mode mixing and the final IDFT into one inner
// product: (1/n) Re(v . Xhat) equals the unfolded W / conjugate-extend /
// IDFT-at-last-position pipeline for every Xhat.
std::vector<Complex> fold_inference_kernel(const CscWeights& w,
                                           const CscConfig& cfg);

// Random init: real and imaginary entries i.i.d. uniform on (-1/m, 1/m).
CscWeights init_weights(const CscConfig& cfg, Rng& rng);

// Reference path: per-step windowed DFT, mode mixing, conjugate extension,
// IDFT at the last position. O(T n m d); the oracle the fast paths are
// checked against. Windows before t = n-1 are zero-padded.
RealSeq forward_direct(const RealSeq& x, const CscWeights& w,
                       const CscConfig& cfg);

// All mode spectra Xhat^(t) for 0 <= t < T via FFT convolution per
// mode-channel pair: Xhat^(t) = sum_i A_i (.) B_{t-i} with A_i = u^(i+1)
// (periodic in n) and B_t = 1_m f_t^T, f_t = x_t - x_{t-n}.
// Returned as T ModeMatrix entries.
std::vector<ModeMatrix> mode_trajectory(const RealSeq& x, const CscConfig& cfg);

// Parallel training path: mode_trajectory plus the folded contraction
// y_t = (1/n) Re(v . Xhat^(t)). Equals forward_direct within 1e-9.
RealSeq forward_parallel(const RealSeq& x, const CscWeights& w,
                         const CscConfig& cfg);

// Algebraically identical fast path: y = g * f with the real scalar kernel
// g_tau = (1/n) Re(sum_k v_k u_k^(tau+1)); d convolutions instead of m*d.
RealSeq forward_fused(const RealSeq& x, const CscWeights& w,
                      const CscConfig& cfg);

// Streaming state: cached spectrum, ring buffer of the last n inputs and a
// step counter. Belongs to exactly one stream.
struct CscStreamCache {
    ModeMatrix spectrum;       // m x d cached Xhat
    std::vector<double> ring;  // n x d, zero-initialized
    std::size_t head = 0;      // next eviction slot
    std::size_t steps = 0;

    explicit CscStreamCache(const CscConfig& cfg);
    void reset();

    // Max-abs deviation between the cached spectrum and a fresh windowed DFT
    // of the ring contents in arrival order (drift check).
    double spectrum_drift(const CscConfig& cfg) const;
};

// Sliding-DFT step: evicts the oldest ring entry, updates each cached mode
// as xhat_k <- u_k * (xhat_k - x_old + x_new), pushes x_new, and returns
// y = (1/n) Re(v . Xhat). O(m d) per step.
std::vector<double> forward_step(const double* x_new, const CscWeights& w,
                                 CscStreamCache& cache, const CscConfig& cfg);

struct CscGradients {
    RealSeq dx;
    std::vector<double> dW_re;  // m x m row-major
    std::vector<double> dW_im;  // m x m row-major
};

// Exact reverse-mode gradients of the forward map, treating W's real and
// imaginary parts as independent real parameters. dx goes through the
// adjoint (correlation) of the FFT convolution.
CscGradients backward(const RealSeq& x, const CscWeights& w,
                      const CscConfig& cfg, const RealSeq& dL_dy);

}  // namespace fcn::csc
