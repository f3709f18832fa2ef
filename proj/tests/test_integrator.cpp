#include <catch2/catch_amalgamated.hpp>

#include <omst/integrator.hpp>
#include <omst/model.hpp>
#include <omst/pulses.hpp>

#include <cmath>

using namespace omst;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Vector3c e1(complex(1, 0), complex(0, 0), complex(0, 0));

GeneratorFn constant_generator(const Matrix3c& m) {
    return [m](double) { return m; };
}

} // namespace

TEST_CASE("integration config validation", "[integrator]") {
    IntegrationConfig c;
    c.t0 = 0.0;
    c.t1 = 1.0;
    c.dt = 0.1;
    CHECK_NOTHROW(c.validate());
    c.dt = -0.1;
    CHECK_THROWS_AS(c.validate(), invalid_argument_error);
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), invalid_argument_error);
    c.dt = 2.0; // longer than the window
    CHECK_THROWS_AS(c.validate(), invalid_argument_error);
    c.dt = 0.1;
    c.t1 = -1.0;
    CHECK_THROWS_AS(c.validate(), invalid_argument_error);
    c.t1 = 1.0;
    c.record_every = 0;
    CHECK_THROWS_AS(c.validate(), invalid_argument_error);
}

TEST_CASE("two-mode exchange has a cosine solution", "[integrator]") {
    const Matrix3c n = build_dynamic_matrix(SystemParams::undamped(), 1.0, 0.0);
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.25;
    cfg.dt = 1e-3;
    cfg.record_every = 100;
    const Trajectory traj = integrate(constant_generator(n), e1, cfg);
    const Vector3c yf = traj.final_state();
    CHECK_THAT(std::abs(yf(0) - complex(std::cos(1.25), 0.0)), WithinAbs(0.0, 1e-10));
    CHECK_THAT(std::abs(yf(1) - complex(0.0, -std::sin(1.25))), WithinAbs(0.0, 1e-10));
    CHECK(std::abs(yf(2)) == 0.0); // the second cavity is never touched
    CHECK(traj.times.back() == 1.25);
    CHECK(traj.times.front() == 0.0);
    const auto pops = traj.final_populations();
    CHECK_THAT(pops[0] + pops[1], WithinRel(1.0, 1e-9));
}

TEST_CASE("zero generator leaves the state untouched", "[integrator]") {
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.0;
    cfg.dt = 0.3;
    const Vector3c y0(complex(0.3, 0.4), complex(0.0, -0.5), complex(0.2, 0.0));
    const Trajectory traj = integrate(constant_generator(Matrix3c::Zero()), y0, cfg);
    CHECK((traj.final_state() - y0).norm() == 0.0);
    // steps land on multiples of dt, with a shortened last step onto t1
    REQUIRE(traj.size() == 5);
    CHECK(traj.times[1] == 0.3);
    CHECK(traj.times[2] == 0.6);
    CHECK(traj.times[3] == 3.0 * 0.3);
    CHECK(traj.times[4] == 1.0);
}

TEST_CASE("recording stride keeps the first and final samples", "[integrator]") {
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.0;
    cfg.dt = 0.25;
    cfg.record_every = 2;
    const Trajectory traj = integrate(constant_generator(Matrix3c::Zero()), e1, cfg);
    REQUIRE(traj.size() == 3);
    CHECK(traj.times[0] == 0.0);
    CHECK(traj.times[1] == 0.5);
    CHECK(traj.times[2] == 1.0);
}

TEST_CASE("uniform damping drains amplitude exponentially", "[integrator]") {
    const Matrix3c n = build_dynamic_matrix(SystemParams::uniform_damping(0.4), 0.0, 0.0);
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 2.0;
    cfg.dt = 1e-3;
    cfg.record_every = 500;
    const Trajectory traj = integrate(constant_generator(n), e1, cfg);
    CHECK_THAT(std::abs(traj.final_state()(0)), WithinRel(std::exp(-0.4), 1e-10));
}

TEST_CASE("undamped evolution preserves the norm", "[integrator]") {
    GeneratorFn gen = [](double t) {
        return build_dynamic_matrix(SystemParams::undamped(), 2.0 * std::sin(3.0 * t),
                                    std::cos(t));
    };
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 2.0;
    cfg.dt = 1e-3;
    cfg.record_every = 100;
    const Trajectory traj = integrate(gen, e1, cfg);
    for (const auto& s : traj.states)
        CHECK_THAT(s.norm(), WithinRel(1.0, 1e-9));
}

TEST_CASE("the flow is linear in the initial state", "[integrator]") {
    GeneratorFn gen = [](double t) {
        return build_dynamic_matrix(SystemParams{0.1, 0.3, 0.0}, std::cos(2.0 * t), 1.0);
    };
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.5;
    cfg.dt = 1e-3;
    cfg.record_every = 1500;
    const Vector3c u(complex(1, 0), complex(0, 0), complex(0, 0));
    const Vector3c v(complex(0, 0.3), complex(0.5, 0), complex(-0.2, 0.1));
    const complex a(0.7, -0.4), b(-1.1, 0.2);
    const Vector3c lhs = integrate(gen, Vector3c(a * u + b * v), cfg).final_state();
    const Vector3c rhs = a * integrate(gen, u, cfg).final_state() +
                         b * integrate(gen, v, cfg).final_state();
    CHECK_THAT((lhs - rhs).norm(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("sampler attaches pulse and rate columns", "[integrator]") {
    const Sin4Schedule sched{2.0, 0.0, 1.0, Ordering::as_printed};
    SamplerFn sampler = [&](double t) { return sample(sched, t); };
    GeneratorFn gen = [&](double t) {
        const PulseSample s = sample(sched, t);
        return build_dynamic_matrix(SystemParams::undamped(), s.g1, s.g2);
    };
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.0;
    cfg.dt = 0.01;
    cfg.record_every = 10;
    const Trajectory traj = integrate(gen, e1, cfg, sampler);
    REQUIRE(traj.pulses.size() == traj.size());
    REQUIRE(traj.thetas.size() == traj.size());
    const size_t k = traj.size() / 2;
    CHECK(traj.pulses[k].g1 == sample(sched, traj.times[k]).g1);
    // without a sampler the columns stay empty
    const Trajectory bare = integrate(gen, e1, cfg);
    CHECK(bare.pulses.empty());
    CHECK(bare.thetas.empty());
}

TEST_CASE("blowup is reported with the last good time", "[integrator]") {
    const Matrix3c stiff = build_dynamic_matrix(SystemParams::undamped(), 1e8, 0.0);
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1.0;
    cfg.dt = 0.01;
    try {
        integrate(constant_generator(stiff), e1, cfg);
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        CHECK(e.last_good >= 0.0);
        CHECK(e.last_good < 1.0);
    }
    CHECK_THROWS_AS(integrate(nullptr, e1, cfg), invalid_argument_error);
    CHECK_THROWS_AS(integrate(constant_generator(stiff),
                              Vector3c(complex(std::nan(""), 0), complex(0, 0), complex(0, 0)),
                              cfg),
                    invalid_argument_error);
}

TEST_CASE("step halving certifies the requested accuracy", "[integrator]") {
    GeneratorFn gen = [](double t) {
        return build_dynamic_matrix(SystemParams::undamped(), 2.0 * std::sin(3.0 * t),
                                    std::cos(t));
    };
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 2.0;
    cfg.dt = 0.05;
    cfg.record_every = 4;
    const ConvergenceResult r = converge(gen, e1, cfg);
    CHECK(r.estimate <= 1e-9);
    CHECK(r.dt < cfg.dt);
    CHECK(r.halvings >= 1);
    // the certified run matches a brute-force fine reference
    IntegrationConfig fine = cfg;
    fine.dt = cfg.dt / 1024.0;
    fine.record_every = cfg.record_every * 1024;
    const Vector3c ref = integrate(gen, e1, fine).final_state();
    CHECK_THAT((r.trajectory.final_state() - ref).norm(), WithinAbs(0.0, 1e-9));
}

TEST_CASE("unreachable tolerance raises with the best estimate", "[integrator]") {
    GeneratorFn gen = [](double t) {
        return build_dynamic_matrix(SystemParams::undamped(), 2.0 * std::sin(3.0 * t),
                                    std::cos(t));
    };
    IntegrationConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 2.0;
    cfg.dt = 0.05;
    try {
        converge(gen, e1, cfg, nullptr, 0.0, 1e-16, 2);
        FAIL("expected accuracy_error");
    } catch (const accuracy_error& e) {
        CHECK(e.best_estimate > 0.0);
        CHECK(e.best_estimate < 1e-3);
    }
}
