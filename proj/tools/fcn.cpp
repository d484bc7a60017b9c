// fcn: command-line front end for the sequence-controller toolkit.
//
// Subcommands: gen-data, spectrum, train, eval, bench-latency, verify.
// Exit codes: 0 success, 1 validation/gate failure, 2 usage error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fcn/attention.hpp"
#include "fcn/bench.hpp"
#include "fcn/csc.hpp"
#include "fcn/data.hpp"
#include "fcn/model.hpp"
#include "fcn/rng.hpp"
#include "fcn/spectrum.hpp"
#include "fcn/training.hpp"

using namespace fcn;

namespace {

int cmd_gen_data(const std::string& task, std::size_t count, std::size_t steps,
                 double dt, double noise, std::uint64_t seed,
                 const std::string& out) {
    Rng rng(seed);
    std::vector<data::Trajectory> trajs;
    trajs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t tseed = seed * 1000003ull + i;
        if (task == "harmonic") {
            trajs.push_back(data::gen_harmonic(
                rng.uniform(0.2, 1.0), rng.uniform(0.3, 4.0),
                rng.uniform(0.0, 6.283185307), steps, dt, noise, tseed));
        } else if (task == "rotor") {
            trajs.push_back(data::gen_accel_rotor(
                rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5),
                rng.uniform(-0.2, 0.2), steps, dt, noise, tseed));
        } else if (task == "masspring") {
            data::RefSignal ref = data::RefSignal::random(rng);
            trajs.push_back(
                data::gen_masspring_imitation(16.0, 8.0, ref, steps, dt, tseed));
        } else {
            std::fprintf(stderr, "unknown task '%s' (harmonic|rotor|masspring)\n",
                         task.c_str());
            return 1;
        }
        trajs.back().meta["seed"] = std::to_string(tseed);
    }
    data::save_trajectories(trajs, out);
    std::printf("wrote %zu %s trajectories (%zu steps each) to %s\n", count,
                task.c_str(), steps, out.c_str());
    return 0;
}

int cmd_spectrum(const std::string& in, std::size_t channel, std::size_t n,
                 std::size_t top_k, std::size_t stride,
                 const std::string& out) {
    auto trajs = data::load_trajectories(in);
    if (trajs.empty()) {
        std::fprintf(stderr, "no trajectories in %s\n", in.c_str());
        return 1;
    }
    // average densities over all trajectories long enough for one window
    std::vector<double> density, cumulative;
    std::size_t used = 0;
    spectrum::SpectrumReport rep;
    for (const auto& tr : trajs) {
        if (tr.states.T < n) continue;
        rep = spectrum::spectrum_report(tr, channel, n, top_k, stride);
        if (density.empty()) density.assign(rep.density_pct.size(), 0.0);
        for (std::size_t k = 0; k < density.size(); ++k)
            density[k] += rep.density_pct[k];
        ++used;
    }
    if (used == 0) {
        std::fprintf(stderr, "no trajectory is at least %zu steps long\n", n);
        return 1;
    }
    double running = 0.0;
    cumulative.resize(density.size());
    for (std::size_t k = 0; k < density.size(); ++k) {
        density[k] /= static_cast<double>(used);
        running += density[k];
        cumulative[k] = running;
    }
    rep.density_pct = density;
    rep.cumulative_pct = cumulative;
    rep.top_k_coverage_pct = cumulative[top_k - 1];
    spectrum::write_spectrum_csv(rep, out);
    std::printf(
        "spectrum over %zu trajectories, channel %zu, window %zu: lowest %zu "
        "of %zu modes carry %.2f%% of the energy; wrote %s\n",
        used, channel, n, top_k, density.size(), rep.top_k_coverage_pct,
        out.c_str());
    return 0;
}

int cmd_train(const std::string& in, const model::FcnetConfig& mc,
              training::TrainConfig tc, bool rtg_tokens,
              const std::string& out, const std::string& loss_csv) {
    auto trajs = data::load_trajectories(in);
    if (trajs.empty()) {
        std::fprintf(stderr, "no trajectories in %s\n", in.c_str());
        return 1;
    }
    if (trajs[0].actions.d == 0) {
        std::fprintf(stderr, "trajectories carry no action channel\n");
        return 1;
    }
    data::NormStats stats = data::fit_norm(trajs);
    data::TokenLayout layout;
    layout.mode = rtg_tokens ? data::TokenMode::RtgActionState
                             : data::TokenMode::StateOnly;
    training::Dataset ds = data::window_dataset(trajs, mc.n, layout, stats);

    model::FcnetConfig cfg = mc;
    cfg.d_s = layout.token_dim(trajs[0].states.d, trajs[0].actions.d);
    cfg.d_a = trajs[0].actions.d;
    cfg.validate();

    std::printf("training on %zu windows (token dim %zu, action dim %zu)\n",
                ds.size(), cfg.d_s, cfg.d_a);
    training::TrainResult res = training::train(ds, tc, cfg, loss_csv);
    for (const auto& row : res.curve)
        std::printf("epoch %zu: train %.6e  val %.6e  lr %.3e\n", row.epoch,
                    row.train_loss, row.val_loss, row.lr);
    model::save_checkpoint(res.params, out);
    std::printf("final validation MSE %.6e; checkpoint written to %s\n",
                res.final_val_loss, out.c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& in, bool rtg_tokens,
             bool streaming) {
    model::FcnetParams params = model::load_checkpoint(ckpt);
    auto trajs = data::load_trajectories(in);
    if (trajs.empty()) {
        std::fprintf(stderr, "no trajectories in %s\n", in.c_str());
        return 1;
    }
    data::NormStats stats = data::fit_norm(trajs);
    data::TokenLayout layout;
    layout.mode = rtg_tokens ? data::TokenMode::RtgActionState
                             : data::TokenMode::StateOnly;
    training::Dataset ds =
        data::window_dataset(trajs, params.cfg.n, layout, stats);
    if (ds.empty() || ds[0].states.d != params.cfg.d_s) {
        std::fprintf(stderr,
                     "token dim %zu does not match checkpoint d_s %zu\n",
                     ds.empty() ? std::size_t(0) : ds[0].states.d,
                     params.cfg.d_s);
        return 1;
    }
    double sum = 0.0;
    std::size_t count = 0;
    if (streaming) model::fold_all_layers(params);
    for (const auto& w : ds) {
        RealSeq pred(w.states.T, params.cfg.d_a);
        if (streaming) {
            model::StreamState s(params.cfg);
            for (std::size_t t = 0; t < w.states.T; ++t) {
                auto y = model::forward_step(w.states.row(t), params, s);
                for (std::size_t ch = 0; ch < pred.d; ++ch)
                    pred.at(t, ch) = y[ch];
            }
        } else {
            pred = model::forward_parallel(w.states, params);
        }
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            const double e = pred.data[i] - w.actions.data[i];
            sum += e * e;
        }
        count += pred.data.size();
    }
    std::printf("MSE over %zu windows (%s path): %.6e\n", ds.size(),
                streaming ? "streaming" : "parallel",
                sum / static_cast<double>(count));
    return 0;
}

int cmd_bench_latency(const bench::LatencyGrid& grid, const std::string& out) {
    auto rows = bench::bench_latency(grid);
    for (const auto& r : rows)
        std::printf("%-6s n=%-5zu L=%zu d_h=%-4zu mean %8.1fus  p99 %8.1fus  "
                    "(%zu samples)\n",
                    r.model.c_str(), r.n, r.layers, r.d_h, 1e6 * r.mean_s,
                    1e6 * r.p99_s, r.samples);
    if (!out.empty()) {
        bench::write_latency_csv(rows, out);
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

// Randomized dual-form self-check, the fast subset of the release gates.
int cmd_verify(std::size_t trials, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t ns[] = {4, 8, 16, 64};
        const std::size_t n = ns[rng.next_u64() % 4];
        csc::CscConfig cfg{n, 1 + rng.next_u64() % (1 + n / 2),
                           1 + rng.next_u64() % 8};
        csc::CscWeights w = csc::init_weights(cfg, rng);
        RealSeq x(2 * n, cfg.d);
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
        RealSeq a = csc::forward_direct(x, w, cfg);
        RealSeq b = csc::forward_parallel(x, w, cfg);
        csc::CscStreamCache cache(cfg);
        for (std::size_t t = 0; t < x.T; ++t) {
            auto y = csc::forward_step(x.row(t), w, cache, cfg);
            for (std::size_t ch = 0; ch < cfg.d; ++ch) {
                worst = std::max(worst, std::abs(y[ch] - a.at(t, ch)));
                worst = std::max(worst, std::abs(b.at(t, ch) - a.at(t, ch)));
            }
        }
    }
    std::printf("verify: %zu random configurations, max dual-form "
                "discrepancy %.3e (gate 1e-9)\n",
                trials, worst);
    return worst <= 1e-9 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fcn: spectral sequence-controller toolkit"};
    app.set_config("--config", "", "read options from a key=value file");
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.usage("Usage: fcn [--config FILE] SUBCOMMAND [OPTIONS]");

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "global random seed")->capture_default_str();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate synthetic trajectories");
    gen->fallthrough();
    std::string gen_task = "masspring";
    std::size_t gen_count = 100, gen_steps = 128;
    double gen_dt = 0.05, gen_noise = 0.0;
    std::string gen_out = "trajectories.txt";
    gen->add_option("--task", gen_task, "harmonic|rotor|masspring")
        ->capture_default_str();
    gen->add_option("--count", gen_count, "trajectory count")
        ->capture_default_str();
    gen->add_option("--steps", gen_steps, "steps per trajectory")
        ->capture_default_str();
    gen->add_option("--dt", gen_dt, "integration step")->capture_default_str();
    gen->add_option("--noise", gen_noise, "observation noise std")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "output file")->capture_default_str();

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "windowed energy-density profile");
    spec->fallthrough();
    std::string spec_in, spec_out = "spectrum.csv";
    std::size_t spec_channel = 0, spec_n = 64, spec_topk = 0, spec_stride = 1;
    spec->add_option("--in", spec_in, "trajectory file")->required();
    spec->add_option("--channel", spec_channel,
                     "channel index (states first, then actions)")
        ->capture_default_str();
    spec->add_option("--n", spec_n, "window length")->capture_default_str();
    spec->add_option("--top-k", spec_topk,
                     "highlighted low-mode count (default: suggested modes)");
    spec->add_option("--stride", spec_stride, "window stride")
        ->capture_default_str();
    spec->add_option("--out", spec_out, "output CSV")->capture_default_str();

    // train
    auto* tr = app.add_subcommand("train", "imitation training");
    tr->fallthrough();
    std::string tr_in, tr_out = "model.ckpt", tr_loss = "";
    model::FcnetConfig mc;
    training::TrainConfig tc;
    bool tr_rtg = false;
    tr->add_option("--in", tr_in, "trajectory file")->required();
    tr->add_option("--out", tr_out, "checkpoint path")->capture_default_str();
    tr->add_option("--loss-csv", tr_loss, "per-epoch loss CSV path");
    tr->add_option("--n", mc.n, "context length")->capture_default_str();
    tr->add_option("--modes", mc.m, "retained modes (0 = heuristic)")
        ->capture_default_str();
    tr->add_option("--d-h", mc.d_h, "hidden width")->capture_default_str();
    tr->add_option("--d-q", mc.d_q, "decoder hidden width")
        ->capture_default_str();
    tr->add_option("--layers", mc.L, "spectral layer count")
        ->capture_default_str();
    tr->add_option("--epochs", tc.epochs, "epoch count")->capture_default_str();
    tr->add_option("--batch-size", tc.batch_size, "minibatch size")
        ->capture_default_str();
    tr->add_option("--lr", tc.base_lr, "peak learning rate")
        ->capture_default_str();
    tr->add_option("--warmup-frac", tc.warmup_frac, "warmup fraction")
        ->capture_default_str();
    tr->add_option("--weight-decay", tc.weight_decay, "decoupled weight decay")
        ->capture_default_str();
    tr->add_option("--grad-clip", tc.grad_clip, "gradient norm clip (0 = off)")
        ->capture_default_str();
    tr->add_option("--target-val-mse", tc.target_val_mse,
                   "early-stop threshold (0 = off)")
        ->capture_default_str();
    tr->add_flag("--rtg-tokens", tr_rtg,
                 "token layout [prev action, return scale, state]");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->fallthrough();
    std::string ev_ckpt, ev_in;
    bool ev_rtg = false, ev_stream = false;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--in", ev_in, "trajectory file")->required();
    ev->add_flag("--rtg-tokens", ev_rtg, "return-conditioned token layout");
    ev->add_flag("--streaming", ev_stream, "use the per-step cached path");

    // bench-latency
    auto* bl = app.add_subcommand("bench-latency", "per-step latency grid");
    bl->fallthrough();
    bench::LatencyGrid grid;
    std::string bl_out = "";
    bl->add_option("--n", grid.ns, "context lengths")->capture_default_str();
    bl->add_option("--layers", grid.layer_counts, "layer counts")
        ->capture_default_str();
    bl->add_option("--d-h", grid.d_hs, "hidden widths")->capture_default_str();
    bl->add_option("--warmup", grid.warmup, "warmup steps")
        ->capture_default_str();
    bl->add_option("--samples", grid.samples, "timed steps")
        ->capture_default_str();
    bl->add_option("--out", bl_out, "output CSV path");

    // verify
    auto* vf = app.add_subcommand("verify", "randomized dual-form self-check");
    vf->fallthrough();
    std::size_t vf_trials = 100;
    vf->add_option("--trials", vf_trials, "random configurations")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (app.get_subcommands().empty()) {
        std::printf("%s\n", app.help().c_str());
        return 2;
    }

    try {
        if (*gen)
            return cmd_gen_data(gen_task, gen_count, gen_steps, gen_dt,
                                gen_noise, seed, gen_out);
        if (*spec) {
            if (spec_topk == 0) spec_topk = model::suggest_modes(spec_n);
            return cmd_spectrum(spec_in, spec_channel, spec_n, spec_topk,
                                spec_stride, spec_out);
        }
        if (*tr) {
            tc.seed = seed;
            return cmd_train(tr_in, mc, tc, tr_rtg, tr_out, tr_loss);
        }
        if (*ev) return cmd_eval(ev_ckpt, ev_in, ev_rtg, ev_stream);
        if (*bl) {
            grid.seed = seed;
            return cmd_bench_latency(grid, bl_out);
        }
        if (*vf) return cmd_verify(vf_trials, seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
