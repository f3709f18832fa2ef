#pragma once

// Coupling schedules g1(t), g2(t) and their time derivatives.  Three kinds:
//
//  * Sin4Schedule: two sin^4 humps of width T, the second delayed by tau.
//    "as-printed" ordering drives g1 first; "counterintuitive" swaps the
//    roles so g2 leads (the STIRAP-like order that transfers a1 -> a2).
//  * InvariantSchedule: the reverse-engineered pair
//        g1 = (pi/2T) cot(xi) sin(pi t / 2T),
//        g2 = (pi/2T) cot(xi) cos(pi t / 2T),
//    defined on [0, T] only.
//  * TabulatedSchedule: nodes from a CSV, natural cubic spline between them,
//    zero outside the tabulated window.
//
// A PulseSample carries the instantaneous values and derivatives; the
// derivative feeds the counterdiabatic term, so it is part of the contract,
// not a convenience.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "omst/errors.hpp"

namespace omst {

struct PulseSample {
    double g1 = 0.0;
    double g2 = 0.0;
    double dg1 = 0.0;
    double dg2 = 0.0;

    double g0() const { return std::hypot(g1, g2); }
    bool finite() const {
        return std::isfinite(g1) && std::isfinite(g2) &&
               std::isfinite(dg1) && std::isfinite(dg2);
    }
};

enum class Ordering { as_printed, counterintuitive };

// sin^4(pi t / T) on (0, T), zero elsewhere.
inline double sin4_envelope(double t, double period) {
    if (!(period > 0.0) || !std::isfinite(period) || !std::isfinite(t))
        throw invalid_argument_error("sin4_envelope: need finite t and period > 0");
    if (t <= 0.0 || t >= period) return 0.0;
    const double s = std::sin(std::numbers::pi * t / period);
    return s * s * s * s;
}

inline double sin4_envelope_derivative(double t, double period) {
    if (!(period > 0.0) || !std::isfinite(period) || !std::isfinite(t))
        throw invalid_argument_error("sin4_envelope: need finite t and period > 0");
    if (t <= 0.0 || t >= period) return 0.0;
    const double w = std::numbers::pi / period;
    const double s = std::sin(w * t);
    return 4.0 * w * s * s * s * std::cos(w * t);
}

struct Sin4Schedule {
    double amplitude = 1.0; // peak coupling G, rad/us
    double offset = 0.0;    // delay tau between the humps, us
    double period = 1.0;    // single-hump width T, us
    Ordering ordering = Ordering::as_printed;

    void validate() const {
        if (!std::isfinite(amplitude) || !std::isfinite(offset) || !(period > 0.0) ||
            !std::isfinite(period))
            throw invalid_argument_error("Sin4Schedule: G, tau finite and T > 0 required");
    }
};

inline PulseSample sample(const Sin4Schedule& s, double t) {
    s.validate();
    if (!std::isfinite(t)) throw invalid_argument_error("sample: t must be finite");
    const double lead = s.amplitude * sin4_envelope(t, s.period);
    const double dlead = s.amplitude * sin4_envelope_derivative(t, s.period);
    const double lag = s.amplitude * sin4_envelope(t - s.offset, s.period);
    const double dlag = s.amplitude * sin4_envelope_derivative(t - s.offset, s.period);
    if (s.ordering == Ordering::as_printed)
        return {lead, lag, dlead, dlag};
    return {lag, lead, dlag, dlead};
}

struct InvariantSchedule {
    double xi = 0.1;    // constant mixing angle, rad, in (0, pi/2)
    double period = 1.0; // transfer time T, us

    void validate() const {
        if (!std::isfinite(xi) || !(xi > 0.0) || !(xi < std::numbers::pi / 2.0))
            throw invalid_argument_error("InvariantSchedule: xi must lie in (0, pi/2)");
        if (!std::isfinite(period) || !(period > 0.0))
            throw invalid_argument_error("InvariantSchedule: T must be positive");
    }

    // Common prefactor (pi / 2T) cot(xi); also the constant g0 of the pair.
    double amplitude() const {
        validate();
        return std::numbers::pi / (2.0 * period) / std::tan(xi);
    }
};

inline PulseSample sample(const InvariantSchedule& s, double t) {
    s.validate();
    if (!std::isfinite(t) || t < 0.0 || t > s.period)
        throw out_of_range_error("InvariantSchedule defined on [0, T] only");
    const double a = s.amplitude();
    const double w = std::numbers::pi / (2.0 * s.period);
    const double c = std::cos(w * t);
    const double sn = std::sin(w * t);
    return {a * sn, a * c, a * w * c, -a * w * sn};
}

class TabulatedSchedule {
public:
    TabulatedSchedule(std::vector<double> t, std::vector<double> g1, std::vector<double> g2)
        : t_(std::move(t)), g1_(std::move(g1)), g2_(std::move(g2)) {
        const size_t n = t_.size();
        if (n < 4 || g1_.size() != n || g2_.size() != n)
            throw invalid_argument_error("TabulatedSchedule: need >= 4 rows of equal length");
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(t_[i]) || !std::isfinite(g1_[i]) || !std::isfinite(g2_[i]))
                throw invalid_argument_error("TabulatedSchedule: non-finite node");
            if (i > 0 && !(t_[i] > t_[i - 1]))
                throw invalid_argument_error("TabulatedSchedule: t must be strictly increasing");
        }
        m1_ = natural_spline_moments(t_, g1_);
        m2_ = natural_spline_moments(t_, g2_);
        peak_ = 0.0;
        for (size_t i = 0; i < n; ++i)
            peak_ = std::max(peak_, std::hypot(g1_[i], g2_[i]));
    }

    static TabulatedSchedule from_csv(std::istream& in) {
        std::string line;
        if (!std::getline(in, line))
            throw config_error("tabulated schedule: empty input", "table");
        strip_cr(line);
        if (line != "t,g1,g2")
            throw config_error("tabulated schedule: header must be exactly 't,g1,g2'", "table");
        std::vector<double> t, g1, g2;
        size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            strip_cr(line);
            if (line.empty()) continue;
            std::array<double, 3> row{};
            size_t pos = 0;
            for (int col = 0; col < 3; ++col) {
                size_t next = (col < 2) ? line.find(',', pos) : line.size();
                if (next == std::string::npos)
                    throw config_error("tabulated schedule: line " + std::to_string(lineno) +
                                           " needs 3 comma-separated values",
                                       "table");
                row[col] = parse_double(line.substr(pos, next - pos), lineno);
                pos = next + 1;
            }
            t.push_back(row[0]);
            g1.push_back(row[1]);
            g2.push_back(row[2]);
        }
        try {
            return TabulatedSchedule(std::move(t), std::move(g1), std::move(g2));
        } catch (const invalid_argument_error& e) {
            throw config_error(std::string("tabulated schedule: ") + e.what(), "table");
        }
    }

    static TabulatedSchedule from_csv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw config_error("tabulated schedule: cannot open '" + path + "'", "table");
        return from_csv(in);
    }

    double t_first() const { return t_.front(); }
    double t_last() const { return t_.back(); }
    double peak() const { return peak_; }
    size_t size() const { return t_.size(); }

    PulseSample at(double t) const {
        if (!std::isfinite(t)) throw invalid_argument_error("sample: t must be finite");
        if (t < t_.front() || t > t_.back()) return {};
        const size_t i = interval(t);
        PulseSample out;
        eval(t_, g1_, m1_, i, t, out.g1, out.dg1);
        eval(t_, g2_, m2_, i, t, out.g2, out.dg2);
        return out;
    }

private:
    static void strip_cr(std::string& s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
            s.pop_back();
    }

    static double parse_double(std::string tok, size_t lineno) {
        const auto ws = [](char c) { return c == ' ' || c == '\t'; };
        while (!tok.empty() && ws(tok.front())) tok.erase(tok.begin());
        while (!tok.empty() && ws(tok.back())) tok.pop_back();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw config_error("tabulated schedule: bad number '" + tok + "' on line " +
                                   std::to_string(lineno),
                               "table");
        return v;
    }

    // Second derivatives of the natural cubic spline (zero curvature at the
    // ends), tridiagonal solve.
    static std::vector<double> natural_spline_moments(const std::vector<double>& x,
                                                      const std::vector<double>& y) {
        const size_t n = x.size();
        std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
        std::vector<double> diag(n, 2.0), rhs(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            const double hl = x[i] - x[i - 1];
            const double hr = x[i + 1] - x[i];
            c[i] = hl / (hl + hr);          // sub-diagonal weight
            d[i] = hr / (hl + hr);          // super-diagonal weight
            rhs[i] = 6.0 / (hl + hr) *
                     ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
        }
        // forward sweep on rows 1..n-2 (rows 0 and n-1 stay m = 0)
        for (size_t i = 2; i + 1 < n; ++i) {
            const double w = c[i] / diag[i - 1];
            diag[i] -= w * d[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (size_t i = n - 2; i >= 1; --i) {
            const double upper = (i + 2 < n) ? d[i] * m[i + 1] : 0.0;
            m[i] = (rhs[i] - upper) / diag[i];
            if (i == 1) break;
        }
        return m;
    }

    size_t interval(double t) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        size_t i = static_cast<size_t>(it - t_.begin());
        if (i == 0) return 0;
        if (i >= t_.size()) return t_.size() - 2;
        return i - 1;
    }

    static void eval(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& m, size_t i, double t, double& val,
                     double& deriv) {
        const double h = x[i + 1] - x[i];
        const double u = x[i + 1] - t;
        const double v = t - x[i];
        val = m[i] * u * u * u / (6.0 * h) + m[i + 1] * v * v * v / (6.0 * h) +
              (y[i] / h - m[i] * h / 6.0) * u + (y[i + 1] / h - m[i + 1] * h / 6.0) * v;
        deriv = -m[i] * u * u / (2.0 * h) + m[i + 1] * v * v / (2.0 * h) -
                (y[i] / h - m[i] * h / 6.0) + (y[i + 1] / h - m[i + 1] * h / 6.0);
    }

    std::vector<double> t_, g1_, g2_;
    std::vector<double> m1_, m2_;
    double peak_ = 0.0;
};

inline PulseSample sample(const TabulatedSchedule& s, double t) { return s.at(t); }

using Schedule = std::variant<Sin4Schedule, InvariantSchedule, TabulatedSchedule>;

inline PulseSample sample(const Schedule& s, double t) {
    return std::visit([t](const auto& sch) { return sample(sch, t); }, s);
}

// Scale used for the vanishing-coupling guard in the mixing-angle rate.
inline double schedule_amplitude(const Schedule& s) {
    struct V {
        double operator()(const Sin4Schedule& x) const { return std::abs(x.amplitude); }
        double operator()(const InvariantSchedule& x) const { return x.amplitude(); }
        double operator()(const TabulatedSchedule& x) const { return x.peak(); }
    };
    return std::visit(V{}, s);
}

// Natural time window the schedule is meant to be integrated over.
inline std::pair<double, double> schedule_span(const Schedule& s) {
    struct V {
        std::pair<double, double> operator()(const Sin4Schedule& x) const {
            return {std::min(0.0, x.offset), x.period + std::max(0.0, x.offset)};
        }
        std::pair<double, double> operator()(const InvariantSchedule& x) const {
            return {0.0, x.period};
        }
        std::pair<double, double> operator()(const TabulatedSchedule& x) const {
            return {x.t_first(), x.t_last()};
        }
    };
    return std::visit(V{}, s);
}

} // namespace omst
