#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "fcn/data.hpp"

using namespace fcn;
using namespace fcn::data;

namespace {

NormStats identity_stats(std::size_t d_s, std::size_t d_a) {
    NormStats s;
    s.state_mean.assign(d_s, 0.0);
    s.state_std.assign(d_s, 1.0);
    s.action_mean.assign(d_a, 0.0);
    s.action_std.assign(d_a, 1.0);
    return s;
}

}  // namespace

TEST_CASE("harmonic generator matches the closed-form oscillator") {
    const double A = 0.5, omega = 2.0, phi = 0.3, dt = 0.01;
    Trajectory tr = gen_harmonic(A, omega, phi, 200, dt, 0.0, 1);
    REQUIRE(tr.states.T == 200);
    REQUIRE(tr.states.d == 2);
    REQUIRE(tr.actions.d == 1);
    for (std::size_t t = 0; t < tr.states.T; ++t) {
        const double tt = dt * static_cast<double>(t);
        const double x = A * std::sin(omega * tt + phi);
        const double v = A * omega * std::cos(omega * tt + phi);
        CHECK(tr.states.at(t, 0) == doctest::Approx(x).epsilon(1e-14));
        CHECK(tr.states.at(t, 1) == doctest::Approx(v).epsilon(1e-14));
        CHECK(tr.actions.at(t, 0) == tr.states.at(t, 0));
    }
}

TEST_CASE("harmonic generator without mirrored action has no action channel") {
    Trajectory tr = gen_harmonic(1.0, 1.0, 0.0, 10, 0.1, 0.0, 1, false);
    CHECK(tr.actions.d == 0);
}

TEST_CASE("noisy harmonic is reproducible per seed") {
    Trajectory a = gen_harmonic(1.0, 1.0, 0.0, 50, 0.1, 0.05, 7);
    Trajectory b = gen_harmonic(1.0, 1.0, 0.0, 50, 0.1, 0.05, 7);
    Trajectory c = gen_harmonic(1.0, 1.0, 0.0, 50, 0.1, 0.05, 8);
    CHECK(a.states.data == b.states.data);
    CHECK(a.states.data != c.states.data);
}

TEST_CASE("accelerating rotor matches its closed form") {
    const double theta0 = 0.2, omega0 = 0.1, alpha = 0.5, dt = 0.02;
    Trajectory tr = gen_accel_rotor(theta0, omega0, alpha, 100, dt, 0.0, 1);
    for (std::size_t t = 0; t < tr.states.T; ++t) {
        const double tt = dt * static_cast<double>(t);
        CHECK(tr.states.at(t, 0) ==
              doctest::Approx(theta0 + omega0 * tt + 0.5 * alpha * tt * tt)
                  .epsilon(1e-14));
        CHECK(tr.states.at(t, 1) ==
              doctest::Approx(omega0 + alpha * tt).epsilon(1e-14));
    }
}

TEST_CASE("mass-spring expert: action is the PD law, dynamics are exact") {
    RefSignal ref;
    ref.terms.push_back({0.6, 1.3, 0.4});
    const double kp = 9.0, kd = 4.0, dt = 0.02;
    Trajectory tr = gen_masspring_imitation(kp, kd, ref, 300, dt, 11);
    REQUIRE(tr.states.d == 3);
    REQUIRE(tr.actions.d == 1);
    for (std::size_t t = 0; t < tr.states.T; ++t) {
        const double tt = dt * static_cast<double>(t);
        CHECK(tr.states.at(t, 2) == doctest::Approx(ref.eval(tt)).epsilon(1e-14));
        const double u = -kp * (tr.states.at(t, 0) - tr.states.at(t, 2)) -
                         kd * tr.states.at(t, 1);
        CHECK(tr.actions.at(t, 0) == doctest::Approx(u).epsilon(1e-12));
        if (t + 1 < tr.states.T) {
            // semi-implicit Euler: v then x
            const double v_next = tr.states.at(t, 1) + dt * tr.actions.at(t, 0);
            const double x_next = tr.states.at(t, 0) + dt * v_next;
            CHECK(tr.states.at(t + 1, 1) ==
                  doctest::Approx(v_next).epsilon(1e-12));
            CHECK(tr.states.at(t + 1, 0) ==
                  doctest::Approx(x_next).epsilon(1e-12));
        }
    }
}

TEST_CASE("mass-spring expert tracks a slow reference after transients") {
    RefSignal ref;
    ref.terms.push_back({0.5, 0.05, 0.0});
    Trajectory tr = gen_masspring_imitation(16.0, 8.0, ref, 2000, 0.02, 3);
    double err = 0.0;
    for (std::size_t t = tr.states.T - 200; t < tr.states.T; ++t)
        err = std::max(err, std::abs(tr.states.at(t, 0) - tr.states.at(t, 2)));
    CHECK(err < 0.05);
}

TEST_CASE("trajectory file roundtrip is value-exact") {
    Trajectory a;
    a.dt = 0.05;
    a.states = RealSeq(3, 2);
    a.actions = RealSeq(3, 1);
    a.states.data = {0.1, -0.2, 1.0 / 3.0, 1e-17, 12345.6789, -0.0};
    a.actions.data = {M_PI, std::sqrt(2.0), -7.25};
    a.meta["seed"] = "42";
    Trajectory b;
    b.dt = 0.1;
    b.states = RealSeq(2, 2);
    b.actions = RealSeq(2, 1);
    b.states.data = {1.0, 2.0, 3.0, 4.0};
    b.actions.data = {5.0, 6.0};

    const std::string path = "/tmp/fcn_test_traj.txt";
    save_trajectories({a, b}, path);
    std::vector<Trajectory> back = load_trajectories(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].dt == a.dt);
    CHECK(back[0].states.data == a.states.data);
    CHECK(back[0].actions.data == a.actions.data);
    CHECK(back[0].meta.at("seed") == "42");
    CHECK(back[1].states.data == b.states.data);
    CHECK(back[1].actions.data == b.actions.data);
    std::remove(path.c_str());
}

TEST_CASE("generated trajectories survive the text format unchanged") {
    Trajectory tr = gen_harmonic(0.7, 2.5, 0.1, 64, 0.05, 0.01, 9);
    const std::string text = serialize_trajectories({tr});
    std::vector<Trajectory> back = parse_trajectories(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].states.data == tr.states.data);
    CHECK(back[0].actions.data == tr.actions.data);
    CHECK(back[0].dt == tr.dt);
    CHECK(back[0].meta == tr.meta);
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS(parse_trajectories("0.1 0.2 0.3\n"));  // data before header
    CHECK_THROWS(parse_trajectories("FCTRAJ v2 d_s=2 d_a=1 dt=0.1\n0 0 0\n"));
    CHECK_THROWS(parse_trajectories("FCTRAJ v1 d_s=-1 d_a=1 dt=0.1\n"));
    CHECK_THROWS(parse_trajectories("FCTRAJ v1 d_s=2 d_a=1 dt=0.1\n0 0\n"));
}

TEST_CASE("fit_norm standardizes and invert_norm undoes it") {
    Trajectory tr;
    tr.dt = 0.1;
    tr.states = RealSeq(4, 2);
    tr.actions = RealSeq(4, 1);
    tr.states.data = {1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0};
    tr.actions.data = {2.0, 4.0, 6.0, 8.0};
    NormStats s = fit_norm({tr});
    CHECK(s.state_mean[0] == doctest::Approx(2.5));
    CHECK(s.state_mean[1] == doctest::Approx(25.0));
    CHECK(s.action_mean[0] == doctest::Approx(5.0));

    Trajectory z = apply_norm(tr, s);
    for (std::size_t ch = 0; ch < 2; ++ch) {
        double mu = 0.0, var = 0.0;
        for (std::size_t t = 0; t < 4; ++t) mu += z.states.at(t, ch);
        mu /= 4.0;
        for (std::size_t t = 0; t < 4; ++t)
            var += (z.states.at(t, ch) - mu) * (z.states.at(t, ch) - mu);
        var /= 4.0;
        CHECK(mu == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
    Trajectory back = invert_norm(z, s);
    for (std::size_t i = 0; i < tr.states.data.size(); ++i)
        CHECK(back.states.data[i] ==
              doctest::Approx(tr.states.data[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < tr.actions.data.size(); ++i)
        CHECK(back.actions.data[i] ==
              doctest::Approx(tr.actions.data[i]).epsilon(1e-12));
}

TEST_CASE("fit_norm floors tiny stds instead of dividing by zero") {
    Trajectory tr;
    tr.dt = 0.1;
    tr.states = RealSeq(3, 1);
    tr.actions = RealSeq(3, 1);
    tr.states.data = {5.0, 5.0, 5.0};
    tr.actions.data = {1.0, 1.0, 1.0};
    NormStats s = fit_norm({tr});
    CHECK(s.state_std[0] >= 1e-8);
    Trajectory z = apply_norm(tr, s);
    for (double v : z.states.data) CHECK(std::isfinite(v));
}

TEST_CASE("window_dataset covers every step and front-pads short windows") {
    Trajectory tr;
    tr.dt = 0.1;
    tr.states = RealSeq(10, 2);
    tr.actions = RealSeq(10, 1);
    for (std::size_t i = 0; i < tr.states.data.size(); ++i)
        tr.states.data[i] = static_cast<double>(i + 1);
    for (std::size_t i = 0; i < tr.actions.data.size(); ++i)
        tr.actions.data[i] = static_cast<double>(i + 100);

    TokenLayout layout;  // StateOnly
    training::Dataset ds =
        window_dataset({tr}, /*n=*/4, layout, identity_stats(2, 1));
    REQUIRE(ds.size() == 3);  // starts 0, 4, 8; last is short
    for (const auto& w : ds) {
        CHECK(w.states.T == 4);
        CHECK(w.states.d == 2);
    }
    // last window holds rows 8..9 at positions 2..3, zeros in front
    const auto& last = ds[2];
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(last.states.at(t, 0) == 0.0);
        CHECK(last.actions.at(t, 0) == 0.0);
    }
    CHECK(last.states.at(2, 0) == tr.states.at(8, 0));
    CHECK(last.states.at(3, 0) == tr.states.at(9, 0));
    CHECK(last.actions.at(3, 0) == tr.actions.at(9, 0));
    // every original row appears exactly once across the windows
    std::vector<int> seen(10, 0);
    for (const auto& w : ds)
        for (std::size_t t = 0; t < w.states.T; ++t)
            for (std::size_t orig = 0; orig < 10; ++orig)
                if (w.states.at(t, 0) == tr.states.at(orig, 0) &&
                    w.actions.at(t, 0) == tr.actions.at(orig, 0))
                    ++seen[orig];
    for (int c : seen) CHECK(c == 1);
}

TEST_CASE("short trajectories yield a single fully padded window") {
    Trajectory tr;
    tr.dt = 0.1;
    tr.states = RealSeq(2, 1);
    tr.actions = RealSeq(2, 1);
    tr.states.data = {3.0, 4.0};
    tr.actions.data = {5.0, 6.0};
    training::Dataset ds =
        window_dataset({tr}, /*n=*/6, TokenLayout{}, identity_stats(1, 1));
    REQUIRE(ds.size() == 1);
    const auto& w = ds[0];
    for (std::size_t t = 0; t < 4; ++t) CHECK(w.states.at(t, 0) == 0.0);
    CHECK(w.states.at(4, 0) == 3.0);
    CHECK(w.states.at(5, 0) == 4.0);
    CHECK(w.actions.at(5, 0) == 6.0);
}

TEST_CASE("return-conditioned tokens are [prev action, return scale, state]") {
    Trajectory tr;
    tr.dt = 0.1;
    tr.states = RealSeq(6, 2);
    tr.actions = RealSeq(6, 1);
    for (std::size_t i = 0; i < tr.states.data.size(); ++i)
        tr.states.data[i] = static_cast<double>(i) * 0.1;
    for (std::size_t i = 0; i < tr.actions.data.size(); ++i)
        tr.actions.data[i] = static_cast<double>(i) * 0.01 + 1.0;

    TokenLayout layout;
    layout.mode = TokenMode::RtgActionState;
    layout.rtg_scale = 1.0;
    training::Dataset ds =
        window_dataset({tr}, /*n=*/6, layout, identity_stats(2, 1));
    REQUIRE(ds.size() == 1);
    const auto& w = ds[0];
    CHECK(w.states.d == 1 + 1 + 2);
    CHECK(w.states.at(0, 0) == 0.0);  // no previous action at t = 0
    for (std::size_t t = 0; t < w.states.T; ++t) {
        if (t > 0) CHECK(w.states.at(t, 0) == tr.actions.at(t - 1, 0));
        CHECK(w.states.at(t, 1) == 1.0);
        CHECK(w.states.at(t, 2) == tr.states.at(t, 0));
        CHECK(w.states.at(t, 3) == tr.states.at(t, 1));
    }
}

TEST_CASE("random reference signals stay within the documented ranges") {
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        RefSignal ref = RefSignal::random(rng);
        CHECK(ref.terms.size() >= 1);
        CHECK(ref.terms.size() <= 3);
        for (const auto& tm : ref.terms) {
            CHECK(tm.amp >= 0.2);
            CHECK(tm.amp <= 1.0);
            CHECK(tm.omega >= 0.3);
            CHECK(tm.omega <= 4.0);
        }
    }
}
