#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcn {

using Complex = std::complex<double>;

// Row-major T x d real sequence. Row t is the sample at time step t.
struct RealSeq {
    std::vector<double> data;
    std::size_t T = 0;
    std::size_t d = 0;

    RealSeq() = default;
    RealSeq(std::size_t T_, std::size_t d_) : data(T_ * d_, 0.0), T(T_), d(d_) {}

    double& at(std::size_t t, std::size_t ch) { return data[t * d + ch]; }
    double at(std::size_t t, std::size_t ch) const { return data[t * d + ch]; }
    double* row(std::size_t t) { return data.data() + t * d; }
    const double* row(std::size_t t) const { return data.data() + t * d; }
};

// m x d complex matrix holding the m lowest DFT modes of a length-n window.
struct ModeMatrix {
    std::vector<Complex> modes;  // row-major, m rows of d channels
    std::size_t m = 0;
    std::size_t d = 0;
    std::size_t n = 0;

    ModeMatrix() = default;
    ModeMatrix(std::size_t m_, std::size_t d_, std::size_t n_)
        : modes(m_ * d_, Complex{0.0, 0.0}), m(m_), d(d_), n(n_) {}

    Complex& at(std::size_t k, std::size_t ch) { return modes[k * d + ch]; }
    Complex at(std::size_t k, std::size_t ch) const { return modes[k * d + ch]; }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline std::size_t max_modes(std::size_t n) { return 1 + n / 2; }

}  // namespace fcn
