#pragma once

// Deterministic file emission.  All floats go through std::to_chars with 17
// significant digits (locale-free, '.' decimal point), lines end with '\n',
// and files are written atomically (temp file in the same directory, then
// rename) so concurrent sweep workers never expose half-written output.

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "omst/errors.hpp"
#include "omst/integrator.hpp"

namespace omst {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (ec != std::errc{}) throw error("format_double: conversion failed");
    return std::string(buf, ptr);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    static std::atomic<unsigned> counter{0};
    const auto dir = path.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
    }
    const auto tmp = path.string() + ".tmp." +
                     std::to_string(static_cast<unsigned long>(::getpid())) + "." +
                     std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw error("atomic_write: cannot open temp file '" + tmp + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw error("atomic_write: short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw error("atomic_write: rename to '" + path.string() + "' failed");
    }
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::string s;
    s.reserve(traj.size() * 220 + 128);
    s += "t,re_a1,im_a1,re_b,im_b,re_a2,im_a2,p_a1,p_b,p_a2,g1,g2,theta,cost_frobenius\n";
    for (size_t i = 0; i < traj.size(); ++i) {
        const Vector3c& v = traj.states[i];
        const PulseSample ps = i < traj.pulses.size() ? traj.pulses[i] : PulseSample{};
        const double th = i < traj.thetas.size() ? traj.thetas[i] : 0.0;
        const double cost = i < traj.cost_frobenius.size() ? traj.cost_frobenius[i] : 0.0;
        s += format_double(traj.times[i]);
        for (int c = 0; c < 3; ++c) {
            s += ',';
            s += format_double(v(c).real());
            s += ',';
            s += format_double(v(c).imag());
        }
        for (double p : traj.populations[i]) {
            s += ',';
            s += format_double(p);
        }
        s += ',';
        s += format_double(ps.g1);
        s += ',';
        s += format_double(ps.g2);
        s += ',';
        s += format_double(th);
        s += ',';
        s += format_double(cost);
        s += '\n';
    }
    return s;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

// Data-only plotting helpers; the CSVs stand on their own.
inline std::string trajectory_plot_script() {
    return "set datafile separator ','\n"
           "set xlabel 't (us)'\n"
           "set ylabel 'population'\n"
           "set yrange [0:1.05]\n"
           "plot 'trajectory.csv' using 1:8 with lines title 'p_a1', \\\n"
           "     'trajectory.csv' using 1:9 with lines title 'p_b', \\\n"
           "     'trajectory.csv' using 1:10 with lines title 'p_a2'\n";
}

inline std::string costs_plot_script() {
    return "set datafile separator ','\n"
           "set xlabel 't (us)'\n"
           "set ylabel 'instantaneous cost (rad/us)'\n"
           "plot 'costs.csv' using 1:5 with lines title 'spectral', \\\n"
           "     'costs.csv' using 1:6 with lines title 'frobenius'\n";
}

inline std::string fig4_plot_script(const std::vector<std::string>& files,
                                    const std::vector<std::string>& labels) {
    std::string s = "set datafile separator ','\n"
                    "set xlabel 'g0 (rad/us)'\n"
                    "set ylabel 'dC/dt / g0'\n"
                    "plot ";
    for (size_t i = 0; i < files.size(); ++i) {
        if (i) s += ", \\\n     ";
        s += "'" + files[i] + "' using 1:2 with lines title '" + labels[i] + "'";
    }
    s += "\n";
    return s;
}

} // namespace omst
