#include "fcn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fcn::data {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Trajectory gen_harmonic(double A, double omega, double phi,
                        std::size_t n_steps, double dt, double noise_std,
                        std::uint64_t seed, bool mirror_action) {
    require(dt > 0.0, "gen_harmonic: dt must be positive");
    require(n_steps >= 1, "gen_harmonic: need at least one step");
    Rng rng(seed);
    Trajectory tr;
    tr.dt = dt;
    tr.states = RealSeq(n_steps, 2);
    tr.actions = RealSeq(n_steps, mirror_action ? 1 : 0);
    tr.meta["task"] = "harmonic";
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double x = A * std::sin(omega * t + phi);
        const double v = A * omega * std::cos(omega * t + phi);
        tr.states.at(i, 0) = x + noise_std * (noise_std > 0 ? rng.normal() : 0.0);
        tr.states.at(i, 1) = v + noise_std * (noise_std > 0 ? rng.normal() : 0.0);
        if (mirror_action) tr.actions.at(i, 0) = tr.states.at(i, 0);
    }
    return tr;
}

Trajectory gen_accel_rotor(double theta0, double omega0, double alpha,
                           std::size_t n_steps, double dt, double noise_std,
                           std::uint64_t seed) {
    require(dt > 0.0, "gen_accel_rotor: dt must be positive");
    require(n_steps >= 1, "gen_accel_rotor: need at least one step");
    Rng rng(seed);
    Trajectory tr;
    tr.dt = dt;
    tr.states = RealSeq(n_steps, 2);
    tr.actions = RealSeq(n_steps, 0);
    tr.meta["task"] = "accel_rotor";
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double theta = theta0 + omega0 * t + 0.5 * alpha * t * t;
        const double omega = omega0 + alpha * t;
        tr.states.at(i, 0) =
            theta + noise_std * (noise_std > 0 ? rng.normal() : 0.0);
        tr.states.at(i, 1) =
            omega + noise_std * (noise_std > 0 ? rng.normal() : 0.0);
    }
    return tr;
}

double RefSignal::eval(double t) const {
    double v = 0.0;
    for (const auto& term : terms)
        v += term.amp * std::sin(term.omega * t + term.phi);
    return v;
}

RefSignal RefSignal::random(Rng& rng) {
    RefSignal r;
    const std::size_t count = 1 + rng.next_u64() % 3;
    for (std::size_t i = 0; i < count; ++i)
        r.terms.push_back({rng.uniform(0.2, 1.0), rng.uniform(0.3, 4.0),
                           rng.uniform(0.0, 6.283185307)});
    return r;
}

Trajectory gen_masspring_imitation(double kp, double kd, const RefSignal& ref,
                                   std::size_t n_steps, double dt,
                                   std::uint64_t seed) {
    require(dt > 0.0, "gen_masspring_imitation: dt must be positive");
    require(kp > 0.0 && kd > 0.0, "gen_masspring_imitation: unstable gains");
    require(n_steps >= 1, "gen_masspring_imitation: need at least one step");
    Rng rng(seed);
    Trajectory tr;
    tr.dt = dt;
    tr.states = RealSeq(n_steps, 3);
    tr.actions = RealSeq(n_steps, 1);
    tr.meta["task"] = "masspring";
    double x = rng.uniform(-0.3, 0.3);
    double v = rng.uniform(-0.3, 0.3);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double x_ref = ref.eval(t);
        const double u = -kp * (x - x_ref) - kd * v;
        tr.states.at(i, 0) = x;
        tr.states.at(i, 1) = v;
        tr.states.at(i, 2) = x_ref;
        tr.actions.at(i, 0) = u;
        // semi-implicit Euler: velocity first, then position
        v += dt * u;
        x += dt * v;
        if (std::abs(x) > 1e6)
            throw std::runtime_error("gen_masspring_imitation: diverged");
    }
    return tr;
}

std::string serialize_trajectories(const std::vector<Trajectory>& trajs) {
    std::ostringstream os;
    bool first = true;
    for (const auto& tr : trajs) {
        if (!first) os << '\n';
        first = false;
        os << "FCTRAJ v1 d_s=" << tr.states.d << " d_a=" << tr.actions.d
           << " dt=" << fmt17(tr.dt) << '\n';
        for (const auto& [k, v] : tr.meta) os << "# " << k << '=' << v << '\n';
        for (std::size_t t = 0; t < tr.states.T; ++t) {
            for (std::size_t i = 0; i < tr.states.d; ++i) {
                if (i) os << ' ';
                os << fmt17(tr.states.at(t, i));
            }
            for (std::size_t i = 0; i < tr.actions.d; ++i) {
                if (i || tr.states.d) os << ' ';
                os << fmt17(tr.actions.at(t, i));
            }
            os << '\n';
        }
    }
    return os.str();
}

std::vector<Trajectory> parse_trajectories(const std::string& text) {
    std::vector<Trajectory> out;
    std::istringstream is(text);
    std::string line;
    Trajectory cur;
    bool in_traj = false;
    std::vector<std::vector<double>> rows;
    std::size_t d_s = 0, d_a = 0;

    auto flush = [&]() {
        if (!in_traj) return;
        cur.states = RealSeq(rows.size(), d_s);
        cur.actions = RealSeq(rows.size(), d_a);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (std::size_t i = 0; i < d_s; ++i) cur.states.at(t, i) = rows[t][i];
            for (std::size_t i = 0; i < d_a; ++i)
                cur.actions.at(t, i) = rows[t][d_s + i];
        }
        out.push_back(std::move(cur));
        cur = Trajectory{};
        rows.clear();
        in_traj = false;
    };

    while (std::getline(is, line)) {
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.rfind("FCTRAJ ", 0) == 0) {
            flush();
            int ds_i = -1, da_i = -1;
            double dt = 0.0;
            if (std::sscanf(line.c_str(), "FCTRAJ v1 d_s=%d d_a=%d dt=%lf",
                            &ds_i, &da_i, &dt) != 3 ||
                ds_i < 0 || da_i < 0)
                throw std::runtime_error("trajectory file: bad header: " + line);
            d_s = static_cast<std::size_t>(ds_i);
            d_a = static_cast<std::size_t>(da_i);
            cur.dt = dt;
            in_traj = true;
            continue;
        }
        if (line[0] == '#') {
            const std::size_t start = line.find_first_not_of(" \t", 1);
            const std::size_t eq = line.find('=', start);
            if (start != std::string::npos && eq != std::string::npos)
                cur.meta[line.substr(start, eq - start)] = line.substr(eq + 1);
            continue;
        }
        require(in_traj, "trajectory file: data before header");
        std::istringstream ls(line);
        std::vector<double> row(d_s + d_a);
        for (auto& v : row)
            if (!(ls >> v))
                throw std::runtime_error("trajectory file: short data row");
        rows.push_back(std::move(row));
    }
    flush();
    return out;
}

void save_trajectories(const std::vector<Trajectory>& trajs,
                       const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    require(os.good(), "save_trajectories: cannot open " + path);
    os << serialize_trajectories(trajs);
    require(os.good(), "save_trajectories: write failed");
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "load_trajectories: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_trajectories(buf.str());
}

NormStats fit_norm(const std::vector<Trajectory>& trajs) {
    require(!trajs.empty(), "fit_norm: empty set");
    const std::size_t d_s = trajs[0].states.d;
    const std::size_t d_a = trajs[0].actions.d;
    NormStats s;
    s.state_mean.assign(d_s, 0.0);
    s.state_std.assign(d_s, 0.0);
    s.action_mean.assign(d_a, 0.0);
    s.action_std.assign(d_a, 0.0);
    std::size_t count = 0;
    for (const auto& tr : trajs) {
        require(tr.states.d == d_s && tr.actions.d == d_a,
                "fit_norm: inconsistent dims");
        for (std::size_t t = 0; t < tr.states.T; ++t) {
            for (std::size_t i = 0; i < d_s; ++i)
                s.state_mean[i] += tr.states.at(t, i);
            for (std::size_t i = 0; i < d_a; ++i)
                s.action_mean[i] += tr.actions.at(t, i);
            ++count;
        }
    }
    for (auto& v : s.state_mean) v /= static_cast<double>(count);
    for (auto& v : s.action_mean) v /= static_cast<double>(count);
    for (const auto& tr : trajs)
        for (std::size_t t = 0; t < tr.states.T; ++t) {
            for (std::size_t i = 0; i < d_s; ++i) {
                const double c = tr.states.at(t, i) - s.state_mean[i];
                s.state_std[i] += c * c;
            }
            for (std::size_t i = 0; i < d_a; ++i) {
                const double c = tr.actions.at(t, i) - s.action_mean[i];
                s.action_std[i] += c * c;
            }
        }
    for (auto& v : s.state_std)
        v = std::max(std::sqrt(v / static_cast<double>(count)), 1e-8);
    for (auto& v : s.action_std)
        v = std::max(std::sqrt(v / static_cast<double>(count)), 1e-8);
    return s;
}

Trajectory apply_norm(const Trajectory& t, const NormStats& s) {
    Trajectory out = t;
    for (std::size_t i = 0; i < out.states.T; ++i) {
        for (std::size_t j = 0; j < out.states.d; ++j)
            out.states.at(i, j) =
                (out.states.at(i, j) - s.state_mean[j]) / s.state_std[j];
        for (std::size_t j = 0; j < out.actions.d; ++j)
            out.actions.at(i, j) =
                (out.actions.at(i, j) - s.action_mean[j]) / s.action_std[j];
    }
    return out;
}

Trajectory invert_norm(const Trajectory& t, const NormStats& s) {
    Trajectory out = t;
    for (std::size_t i = 0; i < out.states.T; ++i) {
        for (std::size_t j = 0; j < out.states.d; ++j)
            out.states.at(i, j) =
                out.states.at(i, j) * s.state_std[j] + s.state_mean[j];
        for (std::size_t j = 0; j < out.actions.d; ++j)
            out.actions.at(i, j) =
                out.actions.at(i, j) * s.action_std[j] + s.action_mean[j];
    }
    return out;
}

training::Dataset window_dataset(const std::vector<Trajectory>& trajs,
                                 std::size_t n, const TokenLayout& layout,
                                 const NormStats& stats, std::size_t stride) {
    require(n >= 1, "window_dataset: n must be >= 1");
    if (stride == 0) stride = n;
    training::Dataset out;
    std::uint64_t traj_id = 0;
    for (const auto& raw : trajs) {
        const Trajectory tr = apply_norm(raw, stats);
        const std::size_t d_s = tr.states.d, d_a = tr.actions.d;
        require(d_a >= 1, "window_dataset: trajectory has no actions");
        const std::size_t token = layout.token_dim(d_s, d_a);
        const std::size_t T = tr.states.T;
        // window starts; trajectories shorter than n yield one padded window
        for (std::size_t start = 0;; start += stride) {
            const std::size_t end = std::min(start + n, T);
            if (start >= T) break;
            const std::size_t len = end - start;
            const std::size_t pad = n - len;
            training::Window w;
            w.traj_id = traj_id;
            w.states = RealSeq(n, token);
            w.actions = RealSeq(n, d_a);
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t t = start + i;
                double* dst = w.states.row(pad + i);
                std::size_t col = 0;
                if (layout.mode == TokenMode::RtgActionState) {
                    for (std::size_t j = 0; j < d_a; ++j)
                        dst[col++] = (t > 0) ? tr.actions.at(t - 1, j) : 0.0;
                    dst[col++] = layout.rtg_scale;
                }
                for (std::size_t j = 0; j < d_s; ++j)
                    dst[col++] = tr.states.at(t, j);
                for (std::size_t j = 0; j < d_a; ++j)
                    w.actions.at(pad + i, j) = tr.actions.at(t, j);
            }
            out.push_back(std::move(w));
            if (end >= T) break;
        }
        ++traj_id;
    }
    return out;
}

}  // namespace fcn::data
