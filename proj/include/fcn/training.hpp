#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcn/model.hpp"
#include "fcn/types.hpp"

namespace fcn::training {

// One training window: an n-step state sequence and its action targets.
struct Window {
    RealSeq states;   // T x d_s
    RealSeq actions;  // T x d_a
    std::uint64_t traj_id = 0;
};

using Dataset = std::vector<Window>;

struct Batch {
    std::vector<const Window*> items;
};

double mse_loss(const std::vector<RealSeq>& pred,
                const std::vector<RealSeq>& target);

// Loss and exact gradient of mse_loss(forward_parallel(.)) over the batch.
// Batch elements are processed in index order; the reduction order is fixed,
// so results are bit-deterministic.
struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};
LossGrad backward_full(const Batch& batch, const model::FcnetParams& p);

struct OptimState {
    std::vector<double> m1;  // first moments
    std::vector<double> m2;  // second moments
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
    explicit OptimState(std::size_t param_count)
        : m1(param_count, 0.0), m2(param_count, 0.0) {}
};

// Adam with bias correction; weight decay is decoupled.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               OptimState& o, double lr_now, double weight_decay);

// Linear warmup to base_lr over warmup_frac*total steps, cosine decay to 0.
double lr_schedule(std::size_t step, std::size_t total, double base_lr,
                   double warmup_frac);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double base_lr = 5e-3;
    double warmup_frac = 0.2;
    double weight_decay = 1e-4;
    double grad_clip = 0.0;  // 0 disables clipping
    std::uint64_t seed = 0;
    // Stop once validation MSE drops below this; 0 disables.
    double target_val_mse = 0.0;

    void validate() const;
};

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    model::FcnetParams params;
    std::vector<EpochRow> curve;
    double final_val_loss = 0.0;
};

// Validation split: windows whose hash(traj_id) % 10 == 0.
bool is_validation(std::uint64_t traj_id);

// Epoch loop over shuffled minibatches; logs one CSV row per epoch
// (header: epoch,train_loss,val_loss,lr) when csv_path is non-empty.
TrainResult train(const Dataset& data, const TrainConfig& tc,
                  const model::FcnetConfig& mc, const std::string& csv_path = "");

double evaluate(const Dataset& data, const model::FcnetParams& p,
                bool validation_only);

}  // namespace fcn::training
