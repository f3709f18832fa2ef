#pragma once

// Three coupled modes: cavity a1, mechanical b, cavity a2, with beam-splitter
// couplings g1 (a1<->b) and g2 (b<->a2).  In the resonant rotating frame the
// amplitudes obey
//
//     d/dt [a1, b, a2]^T = -i * N(t) * [a1, b, a2]^T,
//
//     N = [ -i*k1/2   g1        0      ]
//         [  g1      -i*gm/2    g2     ]
//         [  0        g2       -i*k2/2 ]
//
// with k1, k2 the cavity energy decay rates and gm the mechanical one.
// Everything is in rad/us (see units.hpp).
//
// For k1 = k2 = gm = 0 the spectrum of N is {0, -g0, +g0} with
// g0 = sqrt(g1^2 + g2^2): the characteristic polynomial is -l*(l^2 - g0^2).
// The null eigenvector has no mechanical component (the dark mode); the
// +-g0 pair (bright modes) mixes all three.  Uniform damping
// k1 = k2 = gm = k only shifts every eigenvalue by -i*k/2 and leaves the
// eigenvectors untouched, because N = N0 - i*(k/2)*Id.
//
// Eigen-decomposition ordering convention used everywhere: ascending real
// part, ties broken by ascending imaginary part.  Eigenvector phase: the
// first component of non-negligible modulus is rotated onto the positive
// real axis.

#include <array>
#include <cmath>
#include <complex>
#include <algorithm>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "omst/errors.hpp"
#include "omst/units.hpp"

namespace omst {

using complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

struct SystemParams {
    double kappa1 = 0.0; // cavity-1 decay, rad/us
    double kappa2 = 0.0; // cavity-2 decay, rad/us
    double gamma = 0.0;  // mechanical decay, rad/us

    void validate() const {
        for (double r : {kappa1, kappa2, gamma}) {
            if (!std::isfinite(r) || r < 0.0)
                throw invalid_argument_error("decay rates must be finite and non-negative");
        }
    }

    bool uniform(double rel_tol = 1e-12) const {
        double scale = std::max({kappa1, kappa2, gamma, 1e-300});
        return std::abs(kappa1 - kappa2) <= rel_tol * scale &&
               std::abs(kappa1 - gamma) <= rel_tol * scale;
    }

    static SystemParams undamped() { return {}; }
    static SystemParams uniform_damping(double kappa) { return {kappa, kappa, kappa}; }
};

struct ModeState {
    complex a1{0.0, 0.0};
    complex b{0.0, 0.0};
    complex a2{0.0, 0.0};

    Vector3c vec() const { return Vector3c(a1, b, a2); }
    static ModeState from(const Vector3c& v) { return {v(0), v(1), v(2)}; }
};

inline Matrix3c build_dynamic_matrix(const SystemParams& p, double g1, double g2) {
    p.validate();
    if (!std::isfinite(g1) || !std::isfinite(g2))
        throw invalid_argument_error("couplings must be finite");
    const complex mi(0.0, -0.5);
    Matrix3c n;
    n << mi * p.kappa1, complex(g1, 0.0), complex(0.0, 0.0),
         complex(g1, 0.0), mi * p.gamma, complex(g2, 0.0),
         complex(0.0, 0.0), complex(g2, 0.0), mi * p.kappa2;
    return n;
}

// Zero-eigenvalue mode of the undamped N: no mechanical component, so it is
// immune to mechanical dissipation.  Not phase-normalized beyond the formula;
// the sign convention follows (-g2, 0, g1)/g0.
inline Vector3c dark_mode(double g1, double g2) {
    if (!std::isfinite(g1) || !std::isfinite(g2))
        throw invalid_argument_error("couplings must be finite");
    const double g0 = std::hypot(g1, g2);
    if (g0 == 0.0)
        throw degenerate_couplings_error("dark mode undefined: g1 = g2 = 0");
    return Vector3c(complex(-g2 / g0, 0.0), complex(0.0, 0.0), complex(g1 / g0, 0.0));
}

struct EigenSystem {
    std::array<complex, 3> values;
    std::array<Vector3c, 3> vectors; // columns, same order as values
};

namespace detail {

inline void fix_phase(Vector3c& v, double tol = 0.0) {
    double maxmod = v.cwiseAbs().maxCoeff();
    if (maxmod == 0.0) return;
    const double cut = tol * maxmod;
    for (int i = 0; i < 3; ++i) {
        const double m = std::abs(v(i));
        if (m > cut && m > 0.0) {
            v *= std::conj(v(i)) / m;
            v(i) = complex(std::abs(v(i)), 0.0); // scrub the residual imaginary dust
            return;
        }
    }
}

inline void sort_eigensystem(EigenSystem& es) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const complex& x = es.values[a];
        const complex& y = es.values[b];
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    EigenSystem out;
    for (int i = 0; i < 3; ++i) {
        out.values[i] = es.values[idx[i]];
        out.vectors[i] = es.vectors[idx[i]];
    }
    es = out;
}

} // namespace detail

// Closed-form spectrum of the undamped N.  Order: (-g0, 0, +g0).
inline EigenSystem eigensystem_undamped(double g1, double g2) {
    const double g0 = std::hypot(g1, g2);
    if (g0 == 0.0)
        throw degenerate_couplings_error("eigensystem undefined: g1 = g2 = 0");
    const double c1 = g1 / g0;
    const double c2 = g2 / g0;
    const double r = 1.0 / std::sqrt(2.0);

    EigenSystem es;
    es.values = {complex(-g0, 0.0), complex(0.0, 0.0), complex(g0, 0.0)};
    es.vectors[0] = Vector3c(complex(c1 * r, 0.0), complex(-r, 0.0), complex(c2 * r, 0.0));
    es.vectors[1] = dark_mode(g1, g2);
    es.vectors[2] = Vector3c(complex(c1 * r, 0.0), complex(r, 0.0), complex(c2 * r, 0.0));
    for (auto& v : es.vectors) detail::fix_phase(v);
    detail::sort_eigensystem(es);
    return es;
}

// Uniform damping k1 = k2 = gm = kappa: spectrum shifts to
// {-g0 - i*kappa/2, -i*kappa/2, +g0 - i*kappa/2}, eigenvectors unchanged.
inline EigenSystem eigensystem_damped_uniform(double g1, double g2, double kappa) {
    if (!std::isfinite(kappa) || kappa < 0.0)
        throw invalid_argument_error("kappa must be finite and non-negative");
    EigenSystem es = eigensystem_undamped(g1, g2);
    const complex shift(0.0, -0.5 * kappa);
    for (auto& v : es.values) v += shift;
    detail::sort_eigensystem(es);
    return es;
}

inline EigenSystem eigensystem_damped_uniform(double g1, double g2, const SystemParams& p) {
    p.validate();
    if (!p.uniform())
        throw unsupported_configuration_error(
            "closed form needs kappa1 = kappa2 = gamma; use eigensystem_numeric");
    return eigensystem_damped_uniform(g1, g2, p.kappa1);
}

// Generic dense eigensolve with the library-wide ordering and phase fix.
// Use for non-uniform damping and as an independent cross-check of the
// closed forms.
inline EigenSystem eigensystem_numeric(const Matrix3c& m) {
    if (!m.allFinite())
        throw invalid_argument_error("matrix has non-finite entries");
    Eigen::ComplexEigenSolver<Matrix3c> solver(m, true);
    if (solver.info() != Eigen::Success)
        throw error("eigensolver failed to converge");
    EigenSystem es;
    for (int i = 0; i < 3; ++i) {
        es.values[i] = solver.eigenvalues()(i);
        es.vectors[i] = solver.eigenvectors().col(i);
        es.vectors[i].normalize();
        detail::fix_phase(es.vectors[i], 1e-12);
    }
    detail::sort_eigensystem(es);
    return es;
}

// Electro-optomechanical parameter set from the experiments this model
// targets: gm = 2*pi*0.035 rad/us, coupling reachable ~2*pi*0.91 rad/us,
// mechanical frequency 2*pi*3680 rad/us (i.e. 35 kHz, 910 kHz, 3.68 GHz).
struct ExperimentalPreset {
    SystemParams params;
    double coupling;             // rad/us
    double mechanical_frequency; // rad/us, for frame-validity checks only
};

inline ExperimentalPreset preset_experimental() {
    ExperimentalPreset p;
    const double gm = units::rad_per_us_from_mhz(0.035);
    p.params = {gm, gm, gm};
    p.coupling = units::rad_per_us_from_mhz(0.91);
    p.mechanical_frequency = units::rad_per_us_from_mhz(3680.0);
    return p;
}

} // namespace omst
