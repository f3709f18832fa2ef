#pragma once

// Fixed-step classical RK4 on dA/dt = -i M(t) A for time-dependent complex
// 3x3 generators M.  The generator is sampled at t, t + h/2 and t + h of
// every step (no frozen-matrix shortcut), which keeps the global order at 4
// for time-dependent problems.  Steps land on t0 + k*dt by multiplication,
// not accumulation; if (t1 - t0)/dt is not an integer the last step is
// shortened so the final state sits at exactly t1.
//
// converge() wraps integrate with Richardson step-halving: it compares the
// run against a half-step run on the shared output grid and keeps halving
// until the worst pointwise difference drops under the tolerance.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "omst/counterdiabatic.hpp"
#include "omst/model.hpp"
#include "omst/pulses.hpp"

namespace omst {

struct IntegrationConfig {
    double t0 = 0.0;
    double t1 = 1.0;
    double dt = 1.0 / 4000.0;
    std::int64_t record_every = 1;

    void validate() const {
        if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0))
            throw invalid_argument_error("IntegrationConfig: need finite t1 > t0");
        if (!std::isfinite(dt) || !(dt > 0.0) || dt > (t1 - t0) * (1.0 + 1e-12))
            throw invalid_argument_error("IntegrationConfig: need 0 < dt <= t1 - t0");
        if (record_every < 1)
            throw invalid_argument_error("IntegrationConfig: record_every must be >= 1");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector3c> states;
    std::vector<std::array<double, 3>> populations;
    // Filled only when a pulse sampler is supplied:
    std::vector<PulseSample> pulses;
    std::vector<double> thetas;
    // Filled by the scenario layer:
    std::vector<double> cost_frobenius;

    size_t size() const { return times.size(); }
    const Vector3c& final_state() const { return states.back(); }
    std::array<double, 3> final_populations() const { return populations.back(); }
};

using GeneratorFn = std::function<Matrix3c(double)>;
using SamplerFn = std::function<PulseSample(double)>;

namespace detail {

inline std::array<double, 3> pops_of(const Vector3c& v) {
    return {std::norm(v(0)), std::norm(v(1)), std::norm(v(2))};
}

inline Vector3c rk4_step(const GeneratorFn& gen, const Vector3c& y, double t, double h) {
    const complex mi(0.0, -1.0);
    const Matrix3c m0 = gen(t);
    const Matrix3c mh = gen(t + 0.5 * h);
    const Matrix3c m1 = gen(t + h);
    const Vector3c k1 = mi * (m0 * y);
    const Vector3c k2 = mi * (mh * (y + 0.5 * h * k1));
    const Vector3c k3 = mi * (mh * (y + 0.5 * h * k2));
    const Vector3c k4 = mi * (m1 * (y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace detail

inline Trajectory integrate(const GeneratorFn& generator, const Vector3c& initial,
                            const IntegrationConfig& cfg, const SamplerFn& sampler = nullptr,
                            double eps_g = 0.0) {
    cfg.validate();
    if (!generator) throw invalid_argument_error("integrate: generator required");
    if (!initial.allFinite()) throw invalid_argument_error("integrate: non-finite initial state");

    const double span = cfg.t1 - cfg.t0;
    const auto nsteps = static_cast<std::int64_t>(std::ceil(span / cfg.dt - 1e-9));

    Trajectory traj;
    const auto reserve = static_cast<size_t>(nsteps / cfg.record_every + 2);
    traj.times.reserve(reserve);
    traj.states.reserve(reserve);
    traj.populations.reserve(reserve);

    auto record = [&](double t, const Vector3c& y) {
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.populations.push_back(detail::pops_of(y));
        if (sampler) {
            const PulseSample ps = sampler(t);
            traj.pulses.push_back(ps);
            traj.thetas.push_back(theta(ps, eps_g));
        }
    };

    Vector3c y = initial;
    record(cfg.t0, y);
    for (std::int64_t k = 0; k < nsteps; ++k) {
        const double t = cfg.t0 + static_cast<double>(k) * cfg.dt;
        const bool last = (k == nsteps - 1);
        const double h = last ? cfg.t1 - t : cfg.dt;
        y = detail::rk4_step(generator, y, t, h);
        if (!y.allFinite())
            throw divergence_error("integrate: state became non-finite", t);
        if (last)
            record(cfg.t1, y);
        else if ((k + 1) % cfg.record_every == 0)
            record(cfg.t0 + static_cast<double>(k + 1) * cfg.dt, y);
    }
    return traj;
}

inline Trajectory integrate(const GeneratorFn& generator, const ModeState& initial,
                            const IntegrationConfig& cfg, const SamplerFn& sampler = nullptr,
                            double eps_g = 0.0) {
    return integrate(generator, initial.vec(), cfg, sampler, eps_g);
}

struct ConvergenceResult {
    Trajectory trajectory;    // the finer of the final pair
    double estimate = 0.0;    // max pointwise state difference of the final pair
    double dt = 0.0;          // step of the returned trajectory
    int halvings = 0;         // refinements performed beyond the initial dt
};

// Richardson control: compare dt against dt/2 on the shared recorded grid,
// halving (up to max_halvings) until the difference is <= tol.
inline ConvergenceResult converge(const GeneratorFn& generator, const Vector3c& initial,
                                  IntegrationConfig cfg, const SamplerFn& sampler = nullptr,
                                  double eps_g = 0.0, double tol = 1e-9,
                                  int max_halvings = 6) {
    cfg.validate();
    Trajectory coarse = integrate(generator, initial, cfg, sampler, eps_g);
    double best = std::numeric_limits<double>::infinity();
    for (int h = 1; h <= max_halvings; ++h) {
        IntegrationConfig fine_cfg = cfg;
        fine_cfg.dt = cfg.dt / std::pow(2.0, h);
        fine_cfg.record_every = cfg.record_every * (std::int64_t{1} << h);
        Trajectory fine = integrate(generator, initial, fine_cfg, sampler, eps_g);
        const size_t n = std::min(coarse.size(), fine.size());
        double diff = 0.0;
        for (size_t i = 0; i < n; ++i)
            diff = std::max(diff, (coarse.states[i] - fine.states[i]).norm());
        best = std::min(best, diff);
        if (diff <= tol)
            return {std::move(fine), diff, fine_cfg.dt, h - 1};
        coarse = std::move(fine);
    }
    throw accuracy_error("converge: tolerance unmet after max halvings", best);
}

inline ConvergenceResult converge(const GeneratorFn& generator, const ModeState& initial,
                                  const IntegrationConfig& cfg, const SamplerFn& sampler = nullptr,
                                  double eps_g = 0.0, double tol = 1e-9,
                                  int max_halvings = 6) {
    return converge(generator, initial.vec(), cfg, sampler, eps_g, tol, max_halvings);
}

} // namespace omst
