#pragma once

// Dynamical-invariant machinery for the three-mode chain.  The Hermitian
// invariant is parameterized by two auxiliary angles,
//
//   I(t) = Omega * [ 0            cos(a)sin(b)   -i sin(a)    ]
//                  [ cos(a)sin(b) 0               cos(a)cos(b) ]
//                  [ i sin(a)     cos(a)cos(b)    0            ]
//
// with spectrum {0, -Omega, +Omega}.  Consistency with the undamped
// generator N requires dI/dt = -i [N, I], which pins the angle rates to
//
//   da/dt = g1 cos(b) - g2 sin(b),
//   db/dt = tan(a) * (g2 cos(b) + g1 sin(b)),
//
// and inverting those for the couplings gives the engineering map
//
//   g1 = db * cot(a) * sin(b) + da * cos(b),
//   g2 = db * cot(a) * cos(b) - da * sin(b).
//
// cot(a) makes a ~ 0 singular, hence the guard below.

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "omst/model.hpp"
#include "omst/pulses.hpp"

namespace omst {

struct AuxiliaryAngles {
    double alpha = 0.0;
    double beta = 0.0;
    double dalpha = 0.0;
    double dbeta = 0.0;
};

struct InvariantMatrix {
    double omega = 1.0;
    Matrix3c matrix;
};

inline InvariantMatrix invariant_matrix(const AuxiliaryAngles& ang, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw invalid_argument_error("invariant_matrix: Omega must be positive");
    const double ca = std::cos(ang.alpha), sa = std::sin(ang.alpha);
    const double cb = std::cos(ang.beta), sb = std::sin(ang.beta);
    Matrix3c m;
    m << complex(0, 0), complex(ca * sb, 0), complex(0, -sa),
         complex(ca * sb, 0), complex(0, 0), complex(ca * cb, 0),
         complex(0, sa), complex(ca * cb, 0), complex(0, 0);
    return {omega, omega * m};
}

// Time derivative of the invariant through the angle rates.
inline Matrix3c invariant_derivative(const AuxiliaryAngles& ang, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw invalid_argument_error("invariant_derivative: Omega must be positive");
    const double ca = std::cos(ang.alpha), sa = std::sin(ang.alpha);
    const double cb = std::cos(ang.beta), sb = std::sin(ang.beta);
    const double d12 = -ang.dalpha * sa * sb + ang.dbeta * ca * cb;
    const double d23 = -ang.dalpha * sa * cb - ang.dbeta * ca * sb;
    const double d13 = ang.dalpha * ca;
    Matrix3c m;
    m << complex(0, 0), complex(d12, 0), complex(0, -d13),
         complex(d12, 0), complex(0, 0), complex(d23, 0),
         complex(0, d13), complex(d23, 0), complex(0, 0);
    return omega * m;
}

// Eigenvectors of I for eigenvalues (0, -Omega, +Omega), in that order.
inline std::array<Vector3c, 3> invariant_eigenstates(const AuxiliaryAngles& ang) {
    const double ca = std::cos(ang.alpha), sa = std::sin(ang.alpha);
    const double cb = std::cos(ang.beta), sb = std::sin(ang.beta);
    const double r = 1.0 / std::sqrt(2.0);
    std::array<Vector3c, 3> phi;
    phi[0] = Vector3c(complex(ca * cb, 0), complex(0, -sa), complex(-ca * sb, 0));
    phi[1] = r * Vector3c(complex(sa * cb, -sb), complex(0, ca), complex(-sa * sb, -cb));
    phi[2] = r * Vector3c(complex(sa * cb, sb), complex(0, ca), complex(-sa * sb, cb));
    return phi;
}

inline std::pair<double, double> aux_derivatives(double alpha, double beta, double g1,
                                                 double g2) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(g1) ||
        !std::isfinite(g2))
        throw invalid_argument_error("aux_derivatives: inputs must be finite");
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double along = g2 * cb + g1 * sb;
    const double ta = std::tan(alpha);
    if (ta == 0.0 && along != 0.0)
        throw singular_angle_error("aux_derivatives: alpha = 0 with driving along beta",
                                   std::nan(""));
    return {g1 * cb - g2 * sb, ta * along};
}

// Couplings that keep the invariant consistent at one instant.
inline std::pair<double, double> inverse_engineer(const AuxiliaryAngles& ang) {
    const double sa = std::sin(ang.alpha);
    if (std::abs(sa) < 1e-6)
        throw singular_angle_error("inverse_engineer: |sin(alpha)| < 1e-6, cot(alpha) blows up",
                                   std::nan(""));
    const double cot = std::cos(ang.alpha) / sa;
    const double cb = std::cos(ang.beta), sb = std::sin(ang.beta);
    const double g1 = ang.dbeta * cot * sb + ang.dalpha * cb;
    const double g2 = ang.dbeta * cot * cb - ang.dalpha * sb;
    return {g1, g2};
}

using AngleFn = std::function<AuxiliaryAngles(double)>;

// Grid form: evaluates the map on the given times and returns a spline
// schedule (the spline supplies coupling derivatives, which pointwise angle
// data cannot).
inline TabulatedSchedule inverse_engineer(const AngleFn& angles, std::span<const double> times) {
    if (times.size() < 4)
        throw invalid_argument_error("inverse_engineer: need at least 4 grid times");
    std::vector<double> t(times.begin(), times.end());
    std::vector<double> g1(t.size()), g2(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        const AuxiliaryAngles a = angles(t[i]);
        try {
            std::tie(g1[i], g2[i]) = inverse_engineer(a);
        } catch (const singular_angle_error& e) {
            throw singular_angle_error(e.what(), t[i]);
        }
    }
    return TabulatedSchedule(std::move(t), std::move(g1), std::move(g2));
}

// Max over the grid of || dI/dt - i [I, N] ||_F for the undamped generator
// built from the schedule.  Zero (to roundoff) exactly when schedule and
// angles satisfy the consistency relations above.
inline double invariant_residual(const Schedule& sched, const AngleFn& angles, double omega,
                                 std::span<const double> t_grid) {
    const SystemParams undamped{};
    double worst = 0.0;
    for (double t : t_grid) {
        const PulseSample ps = sample(sched, t);
        const Matrix3c n = build_dynamic_matrix(undamped, ps.g1, ps.g2);
        const AuxiliaryAngles a = angles(t);
        const Matrix3c i_mat = invariant_matrix(a, omega).matrix;
        const Matrix3c di = invariant_derivative(a, omega);
        const Matrix3c resid =
            di - complex(0, 1) * (i_mat * n - n * i_mat);
        worst = std::max(worst, resid.norm());
    }
    return worst;
}

} // namespace omst
