#pragma once

#include <stdexcept>
#include <string>

namespace omst {

// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values (non-finite inputs, negative rates, empty grids, ...).
class invalid_argument_error : public error {
public:
    explicit invalid_argument_error(const std::string& msg) : error(msg) {}
};

// Both couplings vanish where a direction in coupling space is required.
class degenerate_couplings_error : public error {
public:
    explicit degenerate_couplings_error(const std::string& msg) : error(msg) {}
};

// A closed form was requested outside its regime (e.g. non-uniform damping).
class unsupported_configuration_error : public error {
public:
    explicit unsupported_configuration_error(const std::string& msg) : error(msg) {}
};

// Query outside the domain an object is defined on.
class out_of_range_error : public error {
public:
    explicit out_of_range_error(const std::string& msg) : error(msg) {}
};

// Inverse engineering hit sin(alpha) ~ 0 where cot(alpha) blows up.
class singular_angle_error : public error {
public:
    singular_angle_error(const std::string& msg, double t_at) : error(msg), t(t_at) {}
    double t; // time of the offending sample, NaN if not grid-based
};

// The state left the finite range during integration.
class divergence_error : public error {
public:
    divergence_error(const std::string& msg, double last_good_time)
        : error(msg), last_good(last_good_time) {}
    double last_good;
};

// Step refinement exhausted its budget before reaching tolerance.
class accuracy_error : public error {
public:
    accuracy_error(const std::string& msg, double best)
        : error(msg), best_estimate(best) {}
    double best_estimate;
};

// Negative radicand in a closed-form cost expression.
class domain_error : public error {
public:
    domain_error(const std::string& msg, double bad_radicand)
        : error(msg), radicand(bad_radicand) {}
    double radicand;
};

// Malformed configuration input; carries the offending field when known.
class config_error : public error {
public:
    explicit config_error(const std::string& msg, std::string field_name = {})
        : error(msg), field(std::move(field_name)) {}
    std::string field;
};

} // namespace omst
