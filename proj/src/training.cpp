#include "fcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fcn/rng.hpp"

namespace fcn::training {

void TrainConfig::validate() const {
    require(epochs >= 1, "TrainConfig: epochs >= 1");
    require(batch_size >= 1, "TrainConfig: batch_size >= 1");
    require(warmup_frac >= 0.0 && warmup_frac < 1.0,
            "TrainConfig: warmup_frac in [0,1)");
    require(base_lr > 0.0, "TrainConfig: base_lr > 0");
}

double mse_loss(const std::vector<RealSeq>& pred,
                const std::vector<RealSeq>& target) {
    require(pred.size() == target.size() && !pred.empty(),
            "mse_loss: batch size mismatch");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < pred.size(); ++b) {
        require(pred[b].T == target[b].T && pred[b].d == target[b].d,
                "mse_loss: shape mismatch");
        for (std::size_t i = 0; i < pred[b].data.size(); ++i) {
            const double e = pred[b].data[i] - target[b].data[i];
            sum += e * e;
        }
        count += pred[b].data.size();
    }
    return sum / static_cast<double>(count);
}

LossGrad backward_full(const Batch& batch, const model::FcnetParams& p) {
    require(!batch.items.empty(), "backward_full: empty batch");
    LossGrad out;
    out.grad.assign(p.layout.total, 0.0);
    std::size_t count = 0;
    for (const Window* w : batch.items) count += w->actions.data.size();
    const double inv_count = 1.0 / static_cast<double>(count);

    model::Tape tape;
    for (const Window* w : batch.items) {
        RealSeq pred = model::forward_parallel_tape(w->states, p, tape);
        require(pred.d == w->actions.d && pred.T == w->actions.T,
                "backward_full: target shape mismatch");
        RealSeq dout(pred.T, pred.d);
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            const double e = pred.data[i] - w->actions.data[i];
            out.loss += e * e * inv_count;
            dout.data[i] = 2.0 * e * inv_count;
        }
        model::backward_from_tape(p, tape, dout, out.grad);
    }
    return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               OptimState& o, double lr_now, double weight_decay) {
    require(params.size() == grads.size() && params.size() == o.m1.size(),
            "adam_step: shape mismatch");
    ++o.step;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(o.step));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(o.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        o.m1[i] = o.beta1 * o.m1[i] + (1.0 - o.beta1) * grads[i];
        o.m2[i] = o.beta2 * o.m2[i] + (1.0 - o.beta2) * grads[i] * grads[i];
        const double mhat = o.m1[i] / bc1;
        const double vhat = o.m2[i] / bc2;
        params[i] -= lr_now * (mhat / (std::sqrt(vhat) + o.eps) +
                               weight_decay * params[i]);
    }
}

double lr_schedule(std::size_t step, std::size_t total, double base_lr,
                   double warmup_frac) {
    require(step <= total && total >= 1, "lr_schedule: step out of range");
    const double warmup_steps = warmup_frac * static_cast<double>(total);
    const double s = static_cast<double>(step);
    if (s < warmup_steps) return base_lr * s / warmup_steps;
    const double progress =
        (s - warmup_steps) / (static_cast<double>(total) - warmup_steps);
    return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

bool is_validation(std::uint64_t traj_id) { return hash_u64(traj_id) % 10 == 0; }

double evaluate(const Dataset& data, const model::FcnetParams& p,
                bool validation_only) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Window& w : data) {
        if (validation_only && !is_validation(w.traj_id)) continue;
        if (!validation_only && is_validation(w.traj_id)) continue;
        RealSeq pred = model::forward_parallel(w.states, p);
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            const double e = pred.data[i] - w.actions.data[i];
            sum += e * e;
        }
        count += pred.data.size();
    }
    require(count > 0, "evaluate: empty split");
    return sum / static_cast<double>(count);
}

TrainResult train(const Dataset& data, const TrainConfig& tc,
                  const model::FcnetConfig& mc, const std::string& csv_path) {
    tc.validate();
    require(!data.empty(), "train: empty dataset");

    std::vector<const Window*> train_set;
    bool has_val = false;
    for (const Window& w : data) {
        if (is_validation(w.traj_id))
            has_val = true;
        else
            train_set.push_back(&w);
    }
    require(!train_set.empty(), "train: no training windows after split");

    TrainResult res;
    res.params = model::init_params(mc, tc.seed);
    OptimState opt(res.params.layout.total);

    const std::size_t steps_per_epoch =
        (train_set.size() + tc.batch_size - 1) / tc.batch_size;
    const std::size_t total_steps = steps_per_epoch * tc.epochs;

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path, std::ios::trunc);
        require(csv.good(), "train: cannot open loss CSV " + csv_path);
        csv << "epoch,train_loss,val_loss,lr\n";
    }

    Rng shuffle_rng(tc.seed ^ 0x5deece66dULL);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        // Fisher-Yates with the portable Rng, deterministic given seed.
        for (std::size_t i = train_set.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.next_u64() % i;
            std::swap(train_set[i - 1], train_set[j]);
        }
        double epoch_loss = 0.0;
        double lr_now = 0.0;
        for (std::size_t off = 0; off < train_set.size(); off += tc.batch_size) {
            Batch batch;
            const std::size_t end =
                std::min(off + tc.batch_size, train_set.size());
            batch.items.assign(train_set.begin() + static_cast<std::ptrdiff_t>(off),
                               train_set.begin() + static_cast<std::ptrdiff_t>(end));
            LossGrad lg = backward_full(batch, res.params);
            if (tc.grad_clip > 0.0) {
                double norm2 = 0.0;
                for (double g : lg.grad) norm2 += g * g;
                const double norm = std::sqrt(norm2);
                if (norm > tc.grad_clip) {
                    const double scale = tc.grad_clip / norm;
                    for (double& g : lg.grad) g *= scale;
                }
            }
            lr_now = lr_schedule(step, total_steps, tc.base_lr, tc.warmup_frac);
            adam_step(res.params.flat, lg.grad, opt, lr_now, tc.weight_decay);
            epoch_loss += lg.loss * static_cast<double>(end - off);
            ++step;
        }
        epoch_loss /= static_cast<double>(train_set.size());
        const double val_loss =
            has_val ? evaluate(data, res.params, true) : epoch_loss;
        res.curve.push_back({epoch, epoch_loss, val_loss, lr_now});
        if (csv.is_open())
            csv << epoch << ',' << epoch_loss << ',' << val_loss << ',' << lr_now
                << '\n';
        res.final_val_loss = val_loss;
        if (tc.target_val_mse > 0.0 && val_loss < tc.target_val_mse) break;
    }
    return res;
}

}  // namespace fcn::training
