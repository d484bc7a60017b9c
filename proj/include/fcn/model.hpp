#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcn/csc.hpp"
#include "fcn/types.hpp"

namespace fcn::model {

// m heuristic: min(floor(2.5 * ln n), floor(n/2) + 1).
std::size_t suggest_modes(std::size_t n);

struct FcnetConfig {
    std::size_t d_s = 0;       // state dim
    std::size_t d_a = 0;       // action dim
    std::size_t d_h = 128;     // hidden dim
    std::size_t d_q = 128;     // decoder hidden dim
    std::size_t L = 4;         // Fourier layer count
    std::size_t n = 64;        // context length
    std::size_t m = 0;         // mode count; 0 means suggest_modes(n)
    std::size_t ffn_mult = 2;  // FFN expansion factor

    std::size_t modes() const { return m == 0 ? suggest_modes(n) : m; }
    std::size_t ffn_dim() const { return ffn_mult * d_h; }
    csc::CscConfig csc_config() const { return {n, modes(), d_h}; }
    void validate() const;
    bool operator==(const FcnetConfig&) const = default;
};

struct TensorSpec {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = 0;
    std::size_t fan_in = 0;  // 0 for biases / LayerNorm / CSC tensors
};

struct ParamLayout {
    std::vector<TensorSpec> tensors;
    std::size_t total = 0;
    static ParamLayout build(const FcnetConfig& cfg);
    const TensorSpec& find(const std::string& name) const;
};

// All trainable parameters in one flat vector; named views via the layout.
struct FcnetParams {
    FcnetConfig cfg;
    ParamLayout layout;
    std::vector<double> flat;
    // Per-layer folded inference kernels, filled by fold_all_layers. Derived
    // data, not saved in checkpoints; must be refreshed after any W update.
    std::vector<std::vector<Complex>> folded;

    double* tensor(const std::string& name) {
        return flat.data() + layout.find(name).offset;
    }
    const double* tensor(const std::string& name) const {
        return flat.data() + layout.find(name).offset;
    }
    csc::CscWeights csc_weights(std::size_t layer) const;
};

FcnetParams init_params(const FcnetConfig& cfg, std::uint64_t seed);

// Per-row tape of one parallel forward pass, kept for backprop.
struct LayerTape {
    RealSeq h_in;              // layer input
    RealSeq ln1_out;           // A, fed into the CSC
    std::vector<double> ln1_mean, ln1_istd;
    RealSeq csc_out;           // C, pre-GELU
    RealSeq y;                 // after first residual
    RealSeq ln2_out;           // B, fed into the FFN
    std::vector<double> ln2_mean, ln2_istd;
    RealSeq ffn_hidden;        // U, pre-GELU
};

struct Tape {
    RealSeq x0;
    RealSeq h1;  // encoder output
    std::vector<LayerTape> layers;
    RealSeq h_last;    // decoder input (last Fourier layer output)
    RealSeq q_hidden;  // decoder hidden, pre-GELU
    RealSeq out;
};

// Whole-stack parallel pass: P, then L Fourier layers
// (LN -> CSC -> GELU -> residual; LN -> FFN -> residual), then Q.
RealSeq forward_parallel(const RealSeq& x, const FcnetParams& p);

// Same pass, recording activations for training.
RealSeq forward_parallel_tape(const RealSeq& x, const FcnetParams& p, Tape& tape);

// Gradient of a scalar loss w.r.t. every parameter given dL/d(out).
// Accumulates into grad (layout order matches p.layout); returns nothing.
void backward_from_tape(const FcnetParams& p, const Tape& tape,
                        const RealSeq& dL_dout, std::vector<double>& grad);

// Per-stream inference state: one CSC cache per layer plus a step counter.
struct StreamState {
    std::vector<csc::CscStreamCache> caches;
    std::size_t steps = 0;
    explicit StreamState(const FcnetConfig& cfg);
};

void reset_stream(StreamState& s);

// Single-token pass using sliding-DFT caches; O(L*(m*d_h + d_h^2)), no O(n)
// term on the hot path. Weights should be pre-folded for best latency.
std::vector<double> forward_step(const double* x_new, const FcnetParams& p,
                                 StreamState& s);

// Precomputes the folded v = c^T W for every layer (stored inside p).
void fold_all_layers(FcnetParams& p);

// gelu (exact erf form) and its derivative, exposed for the baseline model
double gelu(double x);
double gelu_grad(double x);

}  // namespace fcn::model

namespace fcn::model {

enum class CheckpointErrorKind { Io, BadMagic, BadVersion, Truncated, Parse };

class CheckpointError : public std::runtime_error {
public:
    CheckpointError(CheckpointErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    CheckpointErrorKind kind() const { return kind_; }

private:
    CheckpointErrorKind kind_;
};

// Binary format: magic "FCNCKPT1", version u32, config block, then named
// parameter blobs; all scalars little-endian, parameters as IEEE-754 f64.
void save_checkpoint(const FcnetParams& p, const std::string& path);
FcnetParams load_checkpoint(const std::string& path);

}  // namespace fcn::model
