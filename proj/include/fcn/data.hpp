#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcn/training.hpp"
#include "fcn/types.hpp"

namespace fcn::data {

struct Trajectory {
    RealSeq states;   // T x d_s
    RealSeq actions;  // T x d_a (d_a may be 0)
    double dt = 0.0;
    std::map<std::string, std::string> meta;
};

// x = A sin(omega t + phi), state = [x, v]; action mirrors x when
// mirror_action is set, otherwise the trajectory carries no action channel.
Trajectory gen_harmonic(double A, double omega, double phi,
                        std::size_t n_steps, double dt, double noise_std,
                        std::uint64_t seed, bool mirror_action = true);

// theta = theta0 + omega0 t + alpha t^2 / 2, state = [theta, omega].
Trajectory gen_accel_rotor(double theta0, double omega0, double alpha,
                           std::size_t n_steps, double dt, double noise_std,
                           std::uint64_t seed);

// Smooth reference target for the mass-spring task: sum of up to three
// sinusoids.
struct RefSignal {
    struct Term {
        double amp = 0.0;
        double omega = 0.0;
        double phi = 0.0;
    };
    std::vector<Term> terms;  // at most 3
    double eval(double t) const;
    static RefSignal random(Rng& rng);
};

// Unit mass-spring-damper tracked by an expert PD controller
// u = -kp (x - x_ref) - kd v, integrated with semi-implicit Euler.
// state = [x, v, x_ref], action = u.
Trajectory gen_masspring_imitation(double kp, double kd, const RefSignal& ref,
                                   std::size_t n_steps, double dt,
                                   std::uint64_t seed);

// Line-oriented text format:
//   FCTRAJ v1 d_s=<int> d_a=<int> dt=<float>
//   # key=value           (optional meta lines)
//   <d_s + d_a floats per step, space separated>
//   <blank line between trajectories>
void save_trajectories(const std::vector<Trajectory>& trajs,
                       const std::string& path);
std::vector<Trajectory> load_trajectories(const std::string& path);
std::string serialize_trajectories(const std::vector<Trajectory>& trajs);
std::vector<Trajectory> parse_trajectories(const std::string& text);

struct NormStats {
    std::vector<double> state_mean, state_std;
    std::vector<double> action_mean, action_std;
};

// Per-dimension z-score stats over all steps; std floored at 1e-8.
NormStats fit_norm(const std::vector<Trajectory>& trajs);
Trajectory apply_norm(const Trajectory& t, const NormStats& s);
Trajectory invert_norm(const Trajectory& t, const NormStats& s);

enum class TokenMode { StateOnly, RtgActionState };

struct TokenLayout {
    TokenMode mode = TokenMode::StateOnly;
    double rtg_scale = 1.0;
    std::size_t token_dim(std::size_t d_s, std::size_t d_a) const {
        return mode == TokenMode::StateOnly ? d_s : d_a + 1 + d_s;
    }
};

// Cuts trajectories into length-n windows (stride n by default). Shorter
// trajectories are front-zero-padded, matching the CSC's zero pre-history.
// With RtgActionState each token is [previous action, rtg, state]; expert
// data carries the constant normalized return-to-go rtg_scale.
training::Dataset window_dataset(const std::vector<Trajectory>& trajs,
                                 std::size_t n, const TokenLayout& layout,
                                 const NormStats& stats, std::size_t stride = 0);

}  // namespace fcn::data
