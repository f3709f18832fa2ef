#pragma once

// Transfer diagnostics and the energetic cost of driving.
//
// Two instantaneous cost readings coexist on purpose:
//
//  * spectral: sqrt(2*g0^2 - (3/4)*kappa^2 + 2*theta^2), the closed form
//    obtained from the eigenvalue route sum_m Re(E_m^2) + sum_m mu_m with
//    mu = (theta^2/2, theta^2/2, theta^2).
//  * frobenius: || N + H_cd ||_F computed entrywise from the generator with
//    the halved correction, which works out to
//    sqrt(2*g0^2 + (3/4)*kappa^2 + theta^2/2) for uniform damping.
//
// They disagree whenever kappa > 0 or theta != 0 (opposite sign of the
// kappa^2 term, different theta^2 weight).  Both are reported and the
// discrepancy is flagged; no silent reconciliation.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omst/counterdiabatic.hpp"
#include "omst/integrator.hpp"
#include "omst/model.hpp"
#include "omst/pulses.hpp"

namespace omst {

inline std::array<double, 3> populations(const Vector3c& v) {
    return {std::norm(v(0)), std::norm(v(1)), std::norm(v(2))};
}

inline std::array<double, 3> populations(const ModeState& s) { return populations(s.vec()); }

inline double transfer_fidelity(const Trajectory& traj, int target_mode) {
    if (traj.size() == 0) throw invalid_argument_error("transfer_fidelity: empty trajectory");
    if (target_mode < 0 || target_mode > 2)
        throw invalid_argument_error("transfer_fidelity: target mode must be 0, 1 or 2");
    return traj.populations.back()[static_cast<size_t>(target_mode)];
}

// Eigenvector sensitivities mu_m = <d/dt lam_m | d/dt lam_m> - |<lam_m | d/dt lam_m>|^2.
// Order: (bright, bright, dark).
struct MuValues {
    std::array<double, 3> mu{};
    double sum() const { return mu[0] + mu[1] + mu[2]; }
};

inline MuValues mu_values(double g1, double g2, double dg1, double dg2) {
    const PulseSample s{g1, g2, dg1, dg2};
    if (!s.finite()) throw invalid_argument_error("mu_values: non-finite inputs");
    const double g0sq = g1 * g1 + g2 * g2;
    if (g0sq == 0.0)
        throw degenerate_couplings_error("mu_values: g0 = 0, eigenvectors undefined");
    const double th = (dg1 * g2 - g1 * dg2) / g0sq;
    return {{0.5 * th * th, 0.5 * th * th, th * th}};
}

inline double cost_instantaneous_spectral(double g0, double theta_val, double kappa) {
    if (!std::isfinite(g0) || !std::isfinite(theta_val) || !std::isfinite(kappa))
        throw invalid_argument_error("cost_instantaneous_spectral: non-finite inputs");
    const double radicand = 2.0 * g0 * g0 - 0.75 * kappa * kappa + 2.0 * theta_val * theta_val;
    if (radicand < 0.0)
        throw domain_error("cost_instantaneous_spectral: negative radicand", radicand);
    return std::sqrt(radicand);
}

inline double cost_instantaneous_spectral(const PulseSample& s, double kappa,
                                          double eps_g = 0.0) {
    return cost_instantaneous_spectral(s.g0(), theta(s, eps_g), kappa);
}

inline double cost_instantaneous_frobenius(const SystemParams& p, const PulseSample& s,
                                           double eps_g = 0.0) {
    return driven_generator(p, s, eps_g).norm();
}

enum class CostVariant { spectral, frobenius };

namespace detail {

template <class F>
double simpson(const F& f, double a, double b, std::int64_t intervals) {
    const double h = (b - a) / static_cast<double>(intervals);
    double odd = 0.0, even = 0.0;
    for (std::int64_t i = 1; i < intervals; ++i) {
        const double x = a + static_cast<double>(i) * h;
        if (i % 2) odd += f(x);
        else even += f(x);
    }
    return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

template <class F>
double simpson_adaptive(const F& f, double a, double b, std::int64_t start_intervals,
                        double rel_tol) {
    std::int64_t n = start_intervals;
    double prev = simpson(f, a, b, n);
    for (int round = 0; round < 10; ++round) {
        n *= 2;
        const double cur = simpson(f, a, b, n);
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300))
            return cur;
        prev = cur;
    }
    throw accuracy_error("cost quadrature failed to settle under node doubling", prev);
}

} // namespace detail

// Time-averaged cost (1/(t1-t0)) * integral of the chosen instantaneous
// reading, composite Simpson starting at 2001 nodes with node doubling to
// 1e-8 relative.
inline double cost_integral(const Schedule& sched, const SystemParams& p, double t0, double t1,
                            CostVariant variant, double eps_g = 0.0) {
    if (!(t1 > t0)) throw invalid_argument_error("cost_integral: need t1 > t0");
    p.validate();
    const double kappa = p.kappa1; // spectral closed form assumes uniform damping
    auto f = [&](double t) {
        const PulseSample s = sample(sched, t);
        if (variant == CostVariant::frobenius)
            return cost_instantaneous_frobenius(p, s, eps_g);
        return cost_instantaneous_spectral(s, kappa, eps_g);
    };
    if (variant == CostVariant::spectral && !p.uniform())
        throw unsupported_configuration_error(
            "cost_integral: spectral variant needs uniform damping");
    const double integral = detail::simpson_adaptive(f, t0, t1, 2000, 1e-8);
    return integral / (t1 - t0);
}

inline double cost_integral(const Schedule& sched, const SystemParams& p, double period,
                            CostVariant variant, double eps_g = 0.0) {
    return cost_integral(sched, p, 0.0, period, variant, eps_g);
}

// Normalized speed-limit curve: spectral cost at kappa = kappa_ratio * g0,
// divided by g0, for each grid value.
inline std::vector<std::pair<double, double>> fig4_curve(std::span<const double> g0_grid,
                                                         double theta_fixed,
                                                         double kappa_ratio = 0.01) {
    std::vector<std::pair<double, double>> out;
    out.reserve(g0_grid.size());
    for (double g0 : g0_grid) {
        if (!(g0 > 0.0) || !std::isfinite(g0))
            throw invalid_argument_error("fig4_curve: g0 values must be positive");
        const double c = cost_instantaneous_spectral(g0, theta_fixed, kappa_ratio * g0);
        out.emplace_back(g0, c / g0);
    }
    return out;
}

struct CostReport {
    double c_frobenius = 0.0;
    double c_spectral = 0.0;
    bool discrepancy_flag = false;
    std::vector<double> times;
    std::vector<double> instantaneous_spectral;
    std::vector<double> instantaneous_frobenius;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["C_frobenius"] = c_frobenius;
        j["C_spectral"] = c_spectral;
        j["discrepancy_flag"] = discrepancy_flag;
        j["nodes"] = times.size();
        return j;
    }
};

inline CostReport cost_report(const Schedule& sched, const SystemParams& p, double t0,
                              double t1, size_t nodes = 2001, double eps_g = 0.0) {
    if (!(t1 > t0)) throw invalid_argument_error("cost_report: need t1 > t0");
    if (nodes < 2) throw invalid_argument_error("cost_report: need at least 2 nodes");
    CostReport r;
    r.times.resize(nodes);
    r.instantaneous_spectral.resize(nodes);
    r.instantaneous_frobenius.resize(nodes);
    const double step = (t1 - t0) / static_cast<double>(nodes - 1);
    double maxval = 0.0, maxdiff = 0.0;
    for (size_t i = 0; i < nodes; ++i) {
        const double t = (i + 1 == nodes) ? t1 : t0 + static_cast<double>(i) * step;
        const PulseSample s = sample(sched, t);
        const double cs = cost_instantaneous_spectral(s, p.kappa1, eps_g);
        const double cf = cost_instantaneous_frobenius(p, s, eps_g);
        r.times[i] = t;
        r.instantaneous_spectral[i] = cs;
        r.instantaneous_frobenius[i] = cf;
        maxval = std::max({maxval, cs, cf});
        maxdiff = std::max(maxdiff, std::abs(cs - cf));
    }
    r.discrepancy_flag = maxdiff > 1e-9 * maxval;
    r.c_spectral = cost_integral(sched, p, t0, t1, CostVariant::spectral, eps_g);
    r.c_frobenius = cost_integral(sched, p, t0, t1, CostVariant::frobenius, eps_g);
    return r;
}

} // namespace omst
