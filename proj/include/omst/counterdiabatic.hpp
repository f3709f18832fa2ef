#pragma once

// Transitionless-driving correction.  The mixing angle of the coupling pair
// is theta_m = arctan(g1/g2); its rate
//
//   theta = (dg1*g2 - g1*dg2) / (g1^2 + g2^2)
//
// sets the strength of a direct a1<->a2 drive that suppresses diabatic
// leakage out of the followed eigenbranch.  Two strengths are provided:
//
//   cd_matrix(theta)       entries +-i*theta/2 at (1,3)/(3,1)
//   cd_matrix_exact(theta) entries +-i*theta, twice the above
//
// The exact form equals the definitional sum i * sum_m |d/dt lambda_m><lambda_m|
// over the instantaneous eigenvectors of the uniform-damping generator (the
// sum has no mechanical components; evaluating it is a short exercise with
// the bright/dark basis of model.hpp).  Only the exact form steers the dark
// branch without leakage; see the transitionless property test.  The halved
// form is kept because the spectral cost bookkeeping in metrics.hpp is
// defined against it.
//
// Degeneracy guard: when g0 falls below eps_g (callers use 1e-9 times the
// schedule's peak amplitude) the rate is defined as 0 -- the drive must
// vanish with the couplings, and at sin^4 pulse edges the quotient is 0/0.

#include <cmath>

#include "omst/model.hpp"
#include "omst/pulses.hpp"

namespace omst {

inline double theta(const PulseSample& s, double eps_g = 0.0) {
    if (!s.finite()) throw invalid_argument_error("theta: non-finite pulse sample");
    if (!std::isfinite(eps_g) || eps_g < 0.0)
        throw invalid_argument_error("theta: eps_g must be finite and non-negative");
    const double g0sq = s.g1 * s.g1 + s.g2 * s.g2;
    if (g0sq <= eps_g * eps_g || g0sq == 0.0) return 0.0;
    return (s.dg1 * s.g2 - s.g1 * s.dg2) / g0sq;
}

struct CDSample {
    double theta = 0.0;
    Matrix3c matrix = Matrix3c::Zero();
};

inline Matrix3c cd_matrix(double theta_val) {
    if (!std::isfinite(theta_val)) throw invalid_argument_error("cd_matrix: theta not finite");
    Matrix3c m = Matrix3c::Zero();
    m(0, 2) = complex(0.0, 0.5 * theta_val);
    m(2, 0) = complex(0.0, -0.5 * theta_val);
    return m;
}

inline Matrix3c cd_matrix_exact(double theta_val) {
    if (!std::isfinite(theta_val)) throw invalid_argument_error("cd_matrix: theta not finite");
    Matrix3c m = Matrix3c::Zero();
    m(0, 2) = complex(0.0, theta_val);
    m(2, 0) = complex(0.0, -theta_val);
    return m;
}

inline CDSample cd_sample(const PulseSample& s, double eps_g = 0.0) {
    const double th = theta(s, eps_g);
    return {th, cd_matrix(th)};
}

// N + halved correction; the generator the cost bookkeeping integrates.
inline Matrix3c driven_generator(const SystemParams& p, const PulseSample& s,
                                 double eps_g = 0.0) {
    return build_dynamic_matrix(p, s.g1, s.g2) + cd_matrix(theta(s, eps_g));
}

// N + full-strength correction; follows the dark branch exactly.
inline Matrix3c transitionless_generator(const SystemParams& p, const PulseSample& s,
                                         double eps_g = 0.0) {
    return build_dynamic_matrix(p, s.g1, s.g2) + cd_matrix_exact(theta(s, eps_g));
}

// Distance between the direction of `state` and the unit vector `reference`,
// minimized over a global phase: || state/|state| - e^{i phi} reference ||.
inline double direction_error(const Vector3c& state, const Vector3c& reference) {
    const double n = state.norm();
    if (n == 0.0) return std::sqrt(2.0);
    const Vector3c unit = state / n;
    const complex overlap = reference.dot(unit); // conjugates reference
    const double mo = std::abs(overlap);
    const complex phase = (mo > 0.0) ? overlap / mo : complex(1.0, 0.0);
    return (unit - phase * reference).norm();
}

} // namespace omst
