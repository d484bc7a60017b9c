#pragma once

#include <cstddef>
#include <vector>

#include "fcn/types.hpp"

namespace fcn::spectral {

// Windowed DFT over RELATIVE positions: the oldest sample sits at index 0.
// Returns the m lowest modes of the length-n window, per channel:
//   modes[k][ch] = sum_{i=0}^{n-1} window[i][ch] * exp(-j*2*pi*k*i/n)
// Direct summation; this is the oracle path the fast kernels are checked
// against.
ModeMatrix dft_window(const RealSeq& window, std::size_t m);

// Rebuilds the full n-bin spectrum from m retained modes using the conjugate
// symmetry of real series:
//   z_k = y_k            for 0 <= k < m
//   z_k = conj(y_{n-k})  for n-m+1 <= k < n
//   z_k = 0              otherwise
// At the Nyquist bin (n even, m = n/2+1) both ranges name the same k; the
// first rule wins.
std::vector<Complex> conjugate_extend(const ModeMatrix& y);

// Inverse DFT of a full n x d spectrum evaluated at one position:
//   (1/n) * sum_{k=0}^{n-1} z[k] * exp(j*2*pi*k*position/n)
std::vector<Complex> idft_at(const std::vector<Complex>& z, std::size_t n,
                             std::size_t d, std::size_t position);

struct RfftResult {
    std::vector<Complex> bins;  // 1 + floor(n/2) values
    bool fast_path = false;     // true when the radix-2 path ran
};

// Real-input DFT, radix-2 when n is a power of two, direct summation
// otherwise. Matches dft_window with m = 1 + floor(n/2).
RfftResult rfft(const std::vector<double>& x);

// Inverse of rfft for a real length-n signal.
std::vector<double> irfft(const std::vector<Complex>& bins, std::size_t n);

// Linear convolution of two complex sequences via zero-padded power-of-two
// FFT. Output length is a.size() + b.size() - 1.
std::vector<Complex> fft_linear_convolve(const std::vector<Complex>& a,
                                         const std::vector<Complex>& b);

// In-place radix-2 complex FFT; size must be a power of two. The inverse
// transform includes the 1/n scaling.
void fft_pow2(std::vector<Complex>& a, bool inverse);

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }
std::size_t next_pow2(std::size_t n);

}  // namespace fcn::spectral
