#pragma once

// Built-in property suite behind `omst validate`.  Every check runs with a
// fixed seed and reports a measured number next to its bound, so a failure
// message is directly actionable.  The checks mirror the library's test
// suite but are compiled into the tool, where they can catch a bad build,
// a broken Eigen, or an unexpected FP environment in the field.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "omst/counterdiabatic.hpp"
#include "omst/integrator.hpp"
#include "omst/invariant.hpp"
#include "omst/io.hpp"
#include "omst/metrics.hpp"
#include "omst/model.hpp"
#include "omst/pulses.hpp"

namespace omst {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelfCheckOptions {
    // Step used by the convergence-estimate check; 0 picks the default T/2000.
    double convergence_dt = 0.0;
};

namespace selfcheck_detail {

inline std::string num(double v) { return format_double(v); }

inline CheckResult make(const std::string& name, bool ok, const std::string& detail) {
    return {name, ok, detail};
}

inline double max_vec_dev(const Vector3c& a, const Vector3c& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

inline CheckResult check_eigen_closed_vs_numeric() {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> gd(-10.0, 10.0), kd(0.0, 5.0);
    double worst_val = 0.0, worst_vec = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double g1 = gd(rng), g2 = gd(rng), kappa = kd(rng);
        // Tiny g0 shrinks the eigenvalue gap and poisons the numeric
        // eigenvectors; those draws test nothing about the closed forms.
        if (std::hypot(g1, g2) < 1e-3) continue;
        const auto closed = eigensystem_damped_uniform(g1, g2, kappa);
        const auto numeric =
            eigensystem_numeric(build_dynamic_matrix(SystemParams::uniform_damping(kappa), g1, g2));
        for (int k = 0; k < 3; ++k) {
            worst_val = std::max(worst_val, std::abs(closed.values[k] - numeric.values[k]));
            worst_vec = std::max(worst_vec, max_vec_dev(closed.vectors[k], numeric.vectors[k]));
        }
    }
    const bool ok = worst_val <= 1e-9 && worst_vec <= 1e-8;
    return make("eigen-closed-vs-numeric", ok,
                "max eigenvalue dev " + num(worst_val) + " (<= 1e-9), max eigenvector dev " +
                    num(worst_vec) + " (<= 1e-8), 1000 draws");
}

inline CheckResult check_dark_mode_null() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> gd(-20.0, 20.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double g1 = gd(rng), g2 = gd(rng);
        const double g0 = std::hypot(g1, g2);
        if (g0 < 1e-6) continue;
        const Matrix3c n = build_dynamic_matrix(SystemParams::undamped(), g1, g2);
        worst = std::max(worst, (n * dark_mode(g1, g2)).norm() / g0);
    }
    return make("dark-mode-null-vector", worst <= 1e-12,
                "max |N*psi|/g0 = " + num(worst) + " (<= 1e-12), 500 draws");
}

inline CheckResult check_invariant_spectrum() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ad(-3.14, 3.14), od(0.1, 10.0);
    double worst_h = 0.0, worst_e = 0.0, worst_g = 0.0;
    for (int i = 0; i < 1000; ++i) {
        AuxiliaryAngles ang{ad(rng), ad(rng), 0.0, 0.0};
        const double omega = od(rng);
        const auto inv = invariant_matrix(ang, omega);
        worst_h = std::max(worst_h, (inv.matrix - inv.matrix.adjoint()).norm());
        const auto phi = invariant_eigenstates(ang);
        const double eps[3] = {0.0, -1.0, 1.0};
        Eigen::Matrix3cd gram;
        for (int a = 0; a < 3; ++a) {
            worst_e = std::max(
                worst_e, (inv.matrix * phi[a] - eps[a] * omega * phi[a]).norm() / omega);
            for (int b = 0; b < 3; ++b)
                gram(a, b) = phi[a].dot(phi[b]) - (a == b ? complex(1, 0) : complex(0, 0));
        }
        worst_g = std::max(worst_g, gram.norm());
    }
    const bool ok = worst_h <= 1e-14 && worst_e <= 1e-10 && worst_g <= 1e-12;
    return make("invariant-spectrum-orthonormality", ok,
                "hermiticity " + num(worst_h) + " (<= 1e-14), eigen residual/Omega " +
                    num(worst_e) + " (<= 1e-10), gram dev " + num(worst_g) +
                    " (<= 1e-12), 1000 draws");
}

inline CheckResult check_invariant_residual() {
    const double xi = 0.1, period = 1.0, omega = 1.0;
    const InvariantSchedule sched{xi, period};
    const double g0 = sched.amplitude();
    const double w = std::numbers::pi / (2.0 * period);
    AngleFn angles = [&](double t) { return AuxiliaryAngles{xi, w * t, 0.0, w}; };
    std::vector<double> grid(1001);
    for (size_t i = 0; i < grid.size(); ++i)
        grid[i] = period * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    const double res = invariant_residual(Schedule{sched}, angles, omega, grid);
    const double bound = 1e-8 * omega * std::max(1.0, g0);

    // An inconsistent pair must register loudly.
    AngleFn drifting = [&](double t) { return AuxiliaryAngles{0.4, 2.0 * t, 0.0, 2.0}; };
    const Schedule constant =
        Schedule{TabulatedSchedule({0.0, 0.3, 0.7, 1.0}, {1.0, 1.0, 1.0, 1.0},
                                   {1.0, 1.0, 1.0, 1.0})};
    const double res_bad = invariant_residual(constant, drifting, omega, grid);

    const bool ok = res <= bound && res_bad > 0.1;
    return make("invariant-residual", ok,
                "consistent pair " + num(res) + " (<= " + num(bound) +
                    "), inconsistent pair " + num(res_bad) + " (> 0.1)");
}

inline CheckResult check_inverse_round_trip() {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> pd(0.0, 6.28);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double p1 = pd(rng), p2 = pd(rng);
        auto angles = [&](double t) {
            const double w1 = 2.0 * std::numbers::pi;
            return AuxiliaryAngles{0.6 + 0.25 * std::sin(w1 * t + p1),
                                   0.5 + 0.4 * std::cos(w1 * t + p2),
                                   0.25 * w1 * std::cos(w1 * t + p1),
                                   -0.4 * w1 * std::sin(w1 * t + p2)};
        };
        for (int i = 0; i <= 200; ++i) {
            const double t = static_cast<double>(i) / 200.0;
            const AuxiliaryAngles a = angles(t);
            const auto [g1, g2] = inverse_engineer(a);
            const auto [da, db] = aux_derivatives(a.alpha, a.beta, g1, g2);
            worst = std::max({worst, std::abs(da - a.dalpha), std::abs(db - a.dbeta)});
        }
    }
    return make("inverse-engineering-round-trip", worst <= 1e-10,
                "max angle-rate residual " + num(worst) + " (<= 1e-10), 20 random paths");
}

inline CheckResult check_pulse_derivatives() {
    const double h = 1e-6;
    double worst = 0.0;
    auto fd = [&](auto&& sched, double t) {
        const PulseSample sp = sample(sched, t + h);
        const PulseSample sm = sample(sched, t - h);
        const PulseSample s0 = sample(sched, t);
        const double fd1 = (sp.g1 - sm.g1) / (2.0 * h);
        const double fd2 = (sp.g2 - sm.g2) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(s0.dg1), std::abs(s0.dg2)});
        worst = std::max({worst, std::abs(fd1 - s0.dg1) / scale, std::abs(fd2 - s0.dg2) / scale});
    };
    const Sin4Schedule s4{3.0, 0.2, 1.3, Ordering::counterintuitive};
    const InvariantSchedule inv{0.3, 0.8};
    for (int i = 1; i < 40; ++i) fd(s4, 0.04 * static_cast<double>(i));
    for (int i = 1; i < 40; ++i) fd(inv, 0.02 * static_cast<double>(i) - h);
    std::vector<double> tt, tg1, tg2;
    for (int i = 0; i <= 24; ++i) {
        const double t = static_cast<double>(i) / 24.0;
        tt.push_back(t);
        tg1.push_back(std::sin(3.0 * t));
        tg2.push_back(std::cos(2.0 * t) + 0.4);
    }
    const TabulatedSchedule tab(tt, tg1, tg2);
    for (int i = 1; i < 24; ++i) fd(tab, (static_cast<double>(i) + 0.37) / 24.0);
    return make("pulse-derivative-consistency", worst <= 1e-5,
                "max central-difference deviation " + num(worst) + " (<= 1e-5)");
}

inline CheckResult check_theta_rate() {
    const Sin4Schedule s4{5.0, 0.15, 1.0, Ordering::counterintuitive};
    const InvariantSchedule inv{0.2, 1.0};
    const double h = 1e-6;
    double worst = 0.0;
    auto fd_angle = [&](auto&& sched, double t) {
        const PulseSample sp = sample(sched, t + h);
        const PulseSample sm = sample(sched, t - h);
        const PulseSample s0 = sample(sched, t);
        if (s0.g0() < 1e-3) return;
        const double fd =
            (std::atan2(sp.g1, sp.g2) - std::atan2(sm.g1, sm.g2)) / (2.0 * h);
        const double th = theta(s0);
        worst = std::max(worst, std::abs(fd - th) / std::max(1.0, std::abs(th)));
    };
    for (int i = 1; i < 50; ++i) fd_angle(s4, 0.2 + 0.6 * static_cast<double>(i) / 50.0);
    for (int i = 1; i < 50; ++i) fd_angle(inv, 0.1 + 0.8 * static_cast<double>(i) / 50.0);
    return make("theta-mixing-angle-rate", worst <= 1e-5,
                "max relative deviation from d/dt atan2(g1, g2) = " + num(worst) +
                    " (<= 1e-5)");
}

inline CheckResult check_cd_transitionless() {
    const Sin4Schedule sched{1000.0, 0.1, 1.0, Ordering::counterintuitive};
    const auto [w0, w1] = schedule_span(Schedule{sched});
    const double eps = 1e-9 * sched.amplitude;
    const SystemParams params = SystemParams::undamped();
    auto at = [&](double t) { return sample(sched, t); };
    GeneratorFn gen = [&](double t) { return transitionless_generator(params, at(t), eps); };

    const double dt = (w1 - w0) / 8000.0;
    double t_on = w0;
    while (at(t_on).g0() <= eps) t_on += dt;
    const Vector3c start = dark_mode(at(t_on).g1, at(t_on).g2);

    IntegrationConfig cfg{t_on, w1, dt, 1};
    const Trajectory traj = integrate(gen, start, cfg, at, eps);
    double worst = 0.0;
    for (size_t i = 0; i < traj.size(); ++i) {
        const PulseSample s = traj.pulses[i];
        if (s.g0() <= eps) continue;
        worst = std::max(worst,
                         direction_error(traj.states[i], dark_mode(s.g1, s.g2)));
    }
    const double fid = traj.final_populations()[2];
    const bool ok = worst <= 1e-6 && std::abs(fid - 1.0) <= 1e-4;
    return make("cd-transitionless-following", ok,
                "max direction deviation " + num(worst) + " (<= 1e-6), final |a2|^2 = " +
                    num(fid) + " (1 +- 1e-4)");
}

inline GeneratorFn invariant_generator(const InvariantSchedule& sched) {
    return [sched, period = sched.period](double t) {
        const PulseSample s = sample(sched, std::clamp(t, 0.0, period));
        return build_dynamic_matrix(SystemParams::undamped(), s.g1, s.g2);
    };
}

inline CheckResult check_rk4_order() {
    const InvariantSchedule sched{0.1, 1.0};
    const GeneratorFn gen = invariant_generator(sched);
    const Vector3c init(complex(1, 0), complex(0, 0), complex(0, 0));
    auto final_state = [&](double dt) {
        IntegrationConfig cfg{0.0, 1.0, dt, 1 << 20};
        return integrate(gen, init, cfg).final_state();
    };
    const double base = 1.0 / 100.0;
    const Vector3c ref = final_state(base / 16.0);
    double err[4];
    for (int k = 0; k < 4; ++k)
        err[k] = (final_state(base / std::pow(2.0, k)) - ref).norm();
    bool ok = true;
    std::string ratios;
    for (int k = 0; k < 3; ++k) {
        const double r = err[k] / err[k + 1];
        ok = ok && r >= 8.0 && r <= 32.0;
        ratios += (k ? ", " : "") + num(r);
    }
    return make("rk4-order", ok, "halving error ratios {" + ratios + "} (each in [8, 32])");
}

inline CheckResult check_rk4_norm() {
    const InvariantSchedule sched{0.1, 1.0};
    IntegrationConfig cfg{0.0, 1.0, 1.0 / 4000.0, 10};
    const Trajectory traj = integrate(invariant_generator(sched),
                                      Vector3c(complex(1, 0), complex(0, 0), complex(0, 0)), cfg);
    double worst = 0.0;
    for (const auto& v : traj.states) worst = std::max(worst, std::abs(v.norm() - 1.0));
    return make("rk4-norm-conservation", worst <= 1e-9,
                "max | |A| - 1 | = " + num(worst) + " (<= 1e-9) at kappa = 0");
}

inline CheckResult check_convergence_estimate(const SelfCheckOptions& opts) {
    const InvariantSchedule sched{0.1, 1.0};
    const GeneratorFn gen = invariant_generator(sched);
    const Vector3c init(complex(1, 0), complex(0, 0), complex(0, 0));
    const double dt = opts.convergence_dt > 0.0 ? opts.convergence_dt : 1.0 / 2000.0;
    IntegrationConfig coarse{0.0, 1.0, dt, 1};
    IntegrationConfig fine{0.0, 1.0, dt / 2.0, 2};
    const Trajectory a = integrate(gen, init, coarse);
    const Trajectory b = integrate(gen, init, fine);
    double est = 0.0;
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i)
        est = std::max(est, (a.states[i] - b.states[i]).norm());
    return make("convergence-estimate", est <= 1e-9,
                "Richardson estimate at dt = " + num(dt) + " is " + num(est) + " (<= 1e-9)");
}

inline CheckResult check_linearity() {
    const InvariantSchedule sched{0.2, 1.0};
    const GeneratorFn gen = invariant_generator(sched);
    IntegrationConfig cfg{0.0, 1.0, 1e-3, 1 << 20};
    const Vector3c u(complex(0.6, 0.1), complex(0.0, -0.3), complex(0.2, 0.0));
    const Vector3c v(complex(-0.1, 0.4), complex(0.5, 0.0), complex(0.0, 0.7));
    const Vector3c fu = integrate(gen, u, cfg).final_state();
    const Vector3c fv = integrate(gen, v, cfg).final_state();
    const Vector3c fuv = integrate(gen, Vector3c(u + v), cfg).final_state();
    const double dev = (fuv - fu - fv).norm();
    return make("integrator-linearity", dev <= 1e-10,
                "superposition deviation " + num(dev) + " (<= 1e-10)");
}

inline CheckResult check_damping_factorization() {
    const InvariantSchedule sched{0.1, 1.0};
    const Vector3c init(complex(1, 0), complex(0, 0), complex(0, 0));
    auto run = [&](double kappa) {
        GeneratorFn gen = [&, kappa](double t) {
            const PulseSample s = sample(sched, std::clamp(t, 0.0, 1.0));
            return build_dynamic_matrix(SystemParams::uniform_damping(kappa), s.g1, s.g2);
        };
        IntegrationConfig cfg{0.0, 1.0, 1.0 / 4000.0, 40};
        return integrate(gen, init, cfg);
    };
    const Trajectory base = run(0.0);
    double worst = 0.0;
    for (double kappa : {0.1, 1.0}) {
        const Trajectory damped = run(kappa);
        for (size_t i = 0; i < base.size(); ++i) {
            const double scale = std::exp(-0.5 * kappa * base.times[i]);
            worst = std::max(worst, (damped.states[i] - scale * base.states[i]).norm());
        }
    }
    return make("uniform-damping-factorization", worst <= 1e-8,
                "max |A_k - e^{-kt/2} A_0| = " + num(worst) + " (<= 1e-8), kappa in {0.1, 1}");
}

inline CheckResult check_mu_finite_difference() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> gd(0.5, 3.0), dd(-2.0, 2.0);
    const double h = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double g1 = gd(rng), g2 = gd(rng), dg1 = dd(rng), dg2 = dd(rng);
        auto vecs = [&](double s) {
            return eigensystem_undamped(g1 + s * dg1, g2 + s * dg2).vectors;
        };
        const auto vp = vecs(h), vm = vecs(-h), v0 = vecs(0.0);
        const MuValues closed = mu_values(g1, g2, dg1, dg2);
        // eigensystem order is (bright-, dark, bright+); mu order is
        // (bright, bright, dark)
        const int map[3] = {0, 2, 1};
        for (int m = 0; m < 3; ++m) {
            const Vector3c dv = (vp[map[m]] - vm[map[m]]) / (2.0 * h);
            const complex olap = v0[map[m]].dot(dv);
            const double mu_fd = dv.squaredNorm() - std::norm(olap);
            worst = std::max(worst,
                             std::abs(mu_fd - closed.mu[m]) / std::max(1.0, closed.mu[m]));
        }
    }
    return make("mu-closed-form-vs-fd", worst <= 1e-5,
                "max relative deviation " + num(worst) + " (<= 1e-5), 50 draws");
}

inline CheckResult check_cost_identities() {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> gd(0.2, 5.0), dd(-3.0, 3.0), kd(0.0, 1.0);
    double worst_rad = 0.0, worst_fro = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const double g1 = gd(rng), g2 = gd(rng), dg1 = dd(rng), dg2 = dd(rng);
        const double kappa = kd(rng);
        const PulseSample s{g1, g2, dg1, dg2};
        const double g0 = s.g0();
        const double th = theta(s);

        const auto es = eigensystem_damped_uniform(g1, g2, kappa);
        double re_sum = 0.0;
        for (const auto& e : es.values) re_sum += (e * e).real();
        const double radicand_oracle = re_sum + mu_values(g1, g2, dg1, dg2).sum();
        const double radicand = 2.0 * g0 * g0 - 0.75 * kappa * kappa + 2.0 * th * th;
        worst_rad = std::max(worst_rad,
                             std::abs(radicand - radicand_oracle) / std::max(1.0, radicand));

        const double fro = cost_instantaneous_frobenius(SystemParams::uniform_damping(kappa), s);
        const double fro_closed =
            std::sqrt(2.0 * g0 * g0 + 0.75 * kappa * kappa + 0.5 * th * th);
        worst_fro =
            std::max(worst_fro, std::abs(fro - fro_closed) / std::max(1.0, fro_closed));
    }
    const CostReport rep = cost_report(Schedule{InvariantSchedule{0.1, 1.0}},
                                       SystemParams::undamped(), 0.0, 1.0, 501);
    const bool ok = worst_rad <= 1e-10 && worst_fro <= 1e-12 && rep.discrepancy_flag;
    return make("cost-identities", ok,
                "spectral radicand vs eigen/mu oracle " + num(worst_rad) +
                    " (<= 1e-10), frobenius vs closed form " + num(worst_fro) +
                    " (<= 1e-12), discrepancy flagged: " +
                    (rep.discrepancy_flag ? "yes" : "no"));
}

inline CheckResult check_quadrature() {
    const InvariantSchedule sched{0.1, 1.0};
    const double a = sched.amplitude();
    const double w = std::numbers::pi / 2.0;
    const double closed = std::sqrt(2.0 * a * a + 0.5 * w * w);
    const double got = cost_integral(Schedule{sched}, SystemParams::undamped(), 1.0,
                                     CostVariant::frobenius);
    const double dev = std::abs(got - closed) / closed;
    return make("cost-quadrature", dev <= 1e-10,
                "constant-integrand relative deviation " + num(dev) + " (<= 1e-10)");
}

} // namespace selfcheck_detail

inline std::vector<std::string> selfcheck_names() {
    return {"eigen-closed-vs-numeric",
            "dark-mode-null-vector",
            "invariant-spectrum-orthonormality",
            "invariant-residual",
            "inverse-engineering-round-trip",
            "pulse-derivative-consistency",
            "theta-mixing-angle-rate",
            "cd-transitionless-following",
            "rk4-order",
            "rk4-norm-conservation",
            "convergence-estimate",
            "integrator-linearity",
            "uniform-damping-factorization",
            "mu-closed-form-vs-fd",
            "cost-identities",
            "cost-quadrature"};
}

inline std::vector<CheckResult> run_selfchecks(const SelfCheckOptions& opts = {}) {
    using namespace selfcheck_detail;
    std::vector<CheckResult> out;
    auto guard = [&](const std::string& name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };
    guard("eigen-closed-vs-numeric", check_eigen_closed_vs_numeric);
    guard("dark-mode-null-vector", check_dark_mode_null);
    guard("invariant-spectrum-orthonormality", check_invariant_spectrum);
    guard("invariant-residual", check_invariant_residual);
    guard("inverse-engineering-round-trip", check_inverse_round_trip);
    guard("pulse-derivative-consistency", check_pulse_derivatives);
    guard("theta-mixing-angle-rate", check_theta_rate);
    guard("cd-transitionless-following", check_cd_transitionless);
    guard("rk4-order", check_rk4_order);
    guard("rk4-norm-conservation", check_rk4_norm);
    guard("convergence-estimate", [&] { return check_convergence_estimate(opts); });
    guard("integrator-linearity", check_linearity);
    guard("uniform-damping-factorization", check_damping_factorization);
    guard("mu-closed-form-vs-fd", check_mu_finite_difference);
    guard("cost-identities", check_cost_identities);
    guard("cost-quadrature", check_quadrature);
    return out;
}

} // namespace omst
