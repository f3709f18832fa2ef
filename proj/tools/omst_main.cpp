// omst: command-line front end for the three-mode state-conversion library.
//
// Subcommands:
//   simulate <config.json> [-o dir]   run one scenario, emit trajectory/summary
//   cost     <config.json> [-o dir]   emit instantaneous costs and integrals
//   sweep    <sweep.json>  [-o dir]   run a parameter grid in a worker pool
//   validate [--list]                 run the built-in property suite
//
// Figure presets: `--preset fig1|fig2|fig3` map to simulate, `--preset fig4`
// to cost; each prints the interpretation it bakes in.
//
// Exit codes: 0 success, 1 validation/runtime failure, 2 config error,
// 3 divergence, 4 domain error.

#include <clocale>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <omst/counterdiabatic.hpp>
#include <omst/integrator.hpp>
#include <omst/io.hpp>
#include <omst/metrics.hpp>
#include <omst/model.hpp>
#include <omst/pulses.hpp>
#include <omst/scenario.hpp>
#include <omst/selfcheck.hpp>

namespace fs = std::filesystem;

namespace {

omst::Matrix3c scenario_generator_at(const omst::ScenarioConfig& cfg,
                                     const omst::SystemParams& p,
                                     const omst::PulseSample& s, double eps) {
    if (cfg.protocol == omst::Protocol::sin4_cd) {
        return cfg.cd_strength == omst::CdStrength::exact
                   ? omst::transitionless_generator(p, s, eps)
                   : omst::driven_generator(p, s, eps);
    }
    return omst::build_dynamic_matrix(p, s.g1, s.g2);
}

std::string eigen_csv(const omst::ScenarioResult& res) {
    const omst::SystemParams p = res.config.system();
    std::string s = "t,re_e1,im_e1,re_e2,im_e2,re_e3,im_e3\n";
    const auto& traj = res.trajectory;
    for (size_t i = 0; i < traj.size(); ++i) {
        const auto m = scenario_generator_at(res.config, p, traj.pulses[i], res.eps_g);
        const auto es = omst::eigensystem_numeric(m);
        s += omst::format_double(traj.times[i]);
        for (const auto& e : es.values) {
            s += ',';
            s += omst::format_double(e.real());
            s += ',';
            s += omst::format_double(e.imag());
        }
        s += '\n';
    }
    return s;
}

std::string costs_csv(const omst::Schedule& sched, const omst::SystemParams& p, double t0,
                      double t1, size_t nodes, double eps) {
    if (!p.uniform())
        throw omst::unsupported_configuration_error(
            "cost output needs uniform damping (kappa1 = kappa2 = gamma)");
    std::string s = "t,g1,g2,theta,cost_spectral,cost_frobenius\n";
    const double step = (t1 - t0) / static_cast<double>(nodes - 1);
    for (size_t i = 0; i < nodes; ++i) {
        const double t = (i + 1 == nodes) ? t1 : t0 + static_cast<double>(i) * step;
        const omst::PulseSample ps = omst::sample(sched, t);
        const double th = omst::theta(ps, eps);
        s += omst::format_double(t);
        s += ',';
        s += omst::format_double(ps.g1);
        s += ',';
        s += omst::format_double(ps.g2);
        s += ',';
        s += omst::format_double(th);
        s += ',';
        s += omst::format_double(omst::cost_instantaneous_spectral(ps, p.kappa1, eps));
        s += ',';
        s += omst::format_double(omst::cost_instantaneous_frobenius(p, ps, eps));
        s += '\n';
    }
    return s;
}

void write_scenario_outputs(const omst::ScenarioResult& res, const fs::path& outdir) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    omst::write_json(outdir / "summary.json", omst::summary_json(res));
    std::vector<std::string> written{"summary.json"};
    for (const auto kind : res.config.outputs) {
        if (kind == omst::OutputKind::trajectory) {
            omst::atomic_write(outdir / "trajectory.csv", omst::trajectory_csv(res.trajectory));
            omst::atomic_write(outdir / "plot.gp", omst::trajectory_plot_script());
            written.emplace_back("trajectory.csv");
            written.emplace_back("plot.gp");
        } else if (kind == omst::OutputKind::cost) {
            const omst::Schedule sched = res.config.make_schedule();
            const omst::SystemParams p = res.config.system();
            omst::atomic_write(outdir / "costs.csv",
                               costs_csv(sched, p, res.t_start, res.t_end, 2001, res.eps_g));
            auto rep = omst::cost_report(sched, p, res.t_start, res.t_end, 2001, res.eps_g);
            auto j = rep.to_json();
            j["config"] = res.config.to_json();
            omst::write_json(outdir / "cost_report.json", j);
            omst::atomic_write(outdir / "costs.gp", omst::costs_plot_script());
            written.emplace_back("costs.csv");
            written.emplace_back("cost_report.json");
        } else if (kind == omst::OutputKind::eigen) {
            omst::atomic_write(outdir / "eigen.csv", eigen_csv(res));
            written.emplace_back("eigen.csv");
        }
    }
    std::cout << "wrote";
    for (const auto& w : written) std::cout << ' ' << (outdir / w).string();
    std::cout << '\n';
}

int do_simulate(const std::string& config_path, const std::string& preset,
                const std::string& outdir) {
    omst::ScenarioConfig cfg;
    if (!preset.empty()) {
        if (preset == "fig4")
            throw omst::config_error(
                "fig4 is a cost preset; use `omst cost --preset fig4` or `omst --preset fig4`");
        std::cout << omst::ScenarioConfig::preset_banner(preset) << '\n';
        cfg = omst::ScenarioConfig::preset(preset);
    } else if (!config_path.empty()) {
        cfg = omst::ScenarioConfig::from_file(config_path);
    } else {
        throw omst::config_error("simulate needs a config file or --preset");
    }
    const omst::ScenarioResult res = omst::run_scenario(cfg);
    write_scenario_outputs(res, outdir);
    std::cout << "final populations [p_a1, p_b, p_a2]: [" << res.final_populations[0] << ", "
              << res.final_populations[1] << ", " << res.final_populations[2] << "]\n"
              << "fidelity (final p_a2): " << res.fidelity << '\n'
              << "convergence estimate: " << res.convergence_estimate
              << " at dt = " << res.dt_used << '\n';
    return 0;
}

int do_cost_fig4(const std::string& outdir) {
    std::cout << omst::ScenarioConfig::preset_banner("fig4") << '\n';
    std::error_code ec;
    fs::create_directories(outdir, ec);
    std::vector<double> grid;
    for (int i = 0; i <= 390; ++i) grid.push_back(0.05 * static_cast<double>(i + 10));
    const double pi = std::numbers::pi;
    const std::vector<std::pair<std::string, double>> thetas{
        {"0", 0.0}, {"01pi", 0.1 * pi}, {"02pi", 0.2 * pi}, {"03pi", 0.3 * pi}};
    std::vector<std::string> files, labels;
    for (const auto& [label, th] : thetas) {
        const auto curve = omst::fig4_curve(grid, th);
        std::string csv = "g0,cost_over_g0\n";
        for (const auto& [g0, v] : curve) {
            csv += omst::format_double(g0);
            csv += ',';
            csv += omst::format_double(v);
            csv += '\n';
        }
        const std::string name = "fig4_theta_" + label + ".csv";
        omst::atomic_write(fs::path(outdir) / name, csv);
        files.push_back(name);
        labels.push_back("theta = " + label);
        std::cout << "wrote " << (fs::path(outdir) / name).string() << '\n';
    }
    omst::atomic_write(fs::path(outdir) / "fig4.gp", omst::fig4_plot_script(files, labels));
    return 0;
}

int do_cost(const std::string& config_path, const std::string& preset,
            const std::string& outdir) {
    if (preset == "fig4") return do_cost_fig4(outdir);
    omst::ScenarioConfig cfg;
    if (!preset.empty()) {
        std::cout << omst::ScenarioConfig::preset_banner(preset) << '\n';
        cfg = omst::ScenarioConfig::preset(preset);
    } else if (!config_path.empty()) {
        cfg = omst::ScenarioConfig::from_file(config_path);
    } else {
        throw omst::config_error("cost needs a config file or --preset");
    }
    const omst::Schedule sched = cfg.make_schedule();
    const auto [t0, t1] = omst::schedule_span(sched);
    const omst::SystemParams p = cfg.system();
    const double eps = 1e-9 * omst::schedule_amplitude(sched);
    std::error_code ec;
    fs::create_directories(outdir, ec);
    omst::atomic_write(fs::path(outdir) / "costs.csv", costs_csv(sched, p, t0, t1, 2001, eps));
    auto rep = omst::cost_report(sched, p, t0, t1, 2001, eps);
    auto j = rep.to_json();
    j["config"] = cfg.to_json();
    omst::write_json(fs::path(outdir) / "cost_report.json", j);
    omst::atomic_write(fs::path(outdir) / "costs.gp", omst::costs_plot_script());
    std::cout << "C_spectral = " << rep.c_spectral << ", C_frobenius = " << rep.c_frobenius
              << ", discrepancy_flag = " << (rep.discrepancy_flag ? "true" : "false") << '\n'
              << "wrote " << (fs::path(outdir) / "costs.csv").string() << ' '
              << (fs::path(outdir) / "cost_report.json").string() << '\n';
    return 0;
}

int do_sweep(const std::string& spec_path, const std::string& outdir, unsigned jobs) {
    const omst::SweepSpec spec = omst::SweepSpec::from_file(spec_path);
    std::error_code ec;
    fs::create_directories(outdir, ec);
    auto on_point = [&](size_t i, const omst::ScenarioResult& r) {
        char name[32];
        std::snprintf(name, sizeof(name), "point_%04zu.json", i);
        omst::write_json(fs::path(outdir) / name, omst::summary_json(r));
    };
    const auto rows = omst::run_sweep(spec, jobs, on_point);
    std::string csv = "index,value,status,p_a1,p_b,p_a2,fidelity,cost_spectral,cost_frobenius\n";
    size_t failures = 0;
    for (const auto& row : rows) {
        csv += std::to_string(row.index);
        csv += ',';
        csv += omst::format_double(row.value);
        csv += row.ok ? ",ok" : ",failed";
        for (double p : row.final_populations) {
            csv += ',';
            csv += omst::format_double(p);
        }
        csv += ',';
        csv += omst::format_double(row.fidelity);
        csv += ',';
        csv += omst::format_double(row.cost_spectral);
        csv += ',';
        csv += omst::format_double(row.cost_frobenius);
        csv += '\n';
        if (!row.ok) {
            ++failures;
            std::cerr << "point " << row.index << " (" << spec.parameter << " = " << row.value
                      << ") failed: " << row.message << '\n';
        } else if (!row.message.empty()) {
            std::cerr << "point " << row.index << " note: " << row.message << '\n';
        }
    }
    omst::atomic_write(fs::path(outdir) / "summary.csv", csv);
    std::cout << "sweep over '" << spec.parameter << "': " << rows.size() - failures << "/"
              << rows.size() << " points ok, " << failures << " warnings\n"
              << "wrote " << (fs::path(outdir) / "summary.csv").string() << '\n';
    return 0;
}

int do_validate(bool list_only, double debug_dt) {
    if (list_only) {
        for (const auto& n : omst::selfcheck_names()) std::cout << n << '\n';
        return 0;
    }
    omst::SelfCheckOptions opts;
    opts.convergence_dt = debug_dt;
    const auto results = omst::run_selfchecks(opts);
    size_t failures = 0;
    for (const auto& r : results) {
        if (!r.passed) ++failures;
        std::printf("%-36s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                    r.detail.c_str());
    }
    std::printf("%zu/%zu checks passed\n", results.size() - failures, results.size());
    return failures == 0 ? 0 : 1;
}

template <class Body>
int run_guarded(const Body& body) {
    try {
        return body();
    } catch (const omst::config_error& e) {
        std::cerr << "config error: " << e.what();
        if (!e.field.empty()) std::cerr << " (field: " << e.field << ")";
        std::cerr << '\n';
        return 2;
    } catch (const omst::unsupported_configuration_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const omst::divergence_error& e) {
        std::cerr << "divergence: " << e.what() << " (last good t = " << e.last_good << ")\n";
        return 3;
    } catch (const omst::domain_error& e) {
        std::cerr << "domain error: " << e.what() << " (radicand = " << e.radicand << ")\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"three-mode cavity state conversion: adiabatic and shortcut protocols"};
    app.require_subcommand(0, 1);

    std::string g_preset, g_out = ".";
    app.add_option("--preset", g_preset,
                   "fig1|fig2|fig3|fig4 (fig1-fig3 run simulate, fig4 runs cost)");
    app.add_option("-o,--output", g_out, "output directory for the --preset form");

    auto* sim = app.add_subcommand("simulate", "run one transfer scenario");
    std::string sim_config, sim_preset, sim_out = ".";
    sim->add_option("config", sim_config, "JSON scenario config");
    sim->add_option("--preset", sim_preset, "fig1|fig2|fig3");
    sim->add_option("-o,--output", sim_out, "output directory");

    auto* cost = app.add_subcommand("cost", "evaluate driving cost for a schedule");
    std::string cost_config, cost_preset, cost_out = ".";
    cost->add_option("config", cost_config, "JSON scenario config");
    cost->add_option("--preset", cost_preset, "fig1|fig2|fig3|fig4");
    cost->add_option("-o,--output", cost_out, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
    std::string sweep_spec, sweep_out = ".";
    unsigned sweep_jobs = 0;
    sweep->add_option("spec", sweep_spec, "JSON sweep spec")->required();
    sweep->add_option("-o,--output", sweep_out, "output directory");
    sweep->add_option("-j,--jobs", sweep_jobs, "worker threads (default: hardware)");

    auto* validate = app.add_subcommand("validate", "run the built-in property suite");
    bool val_list = false;
    double val_debug_dt = 0.0;
    validate->add_flag("--list", val_list, "list checks without running them");
    validate
        ->add_option("--debug-convergence-dt", val_debug_dt,
                     "override the convergence check's step (testing aid)")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*sim) return run_guarded([&] { return do_simulate(sim_config, sim_preset, sim_out); });
    if (*cost) return run_guarded([&] { return do_cost(cost_config, cost_preset, cost_out); });
    if (*sweep) return run_guarded([&] { return do_sweep(sweep_spec, sweep_out, sweep_jobs); });
    if (*validate) return run_guarded([&] { return do_validate(val_list, val_debug_dt); });

    if (!g_preset.empty()) {
        return run_guarded([&] {
            if (g_preset == "fig4") return do_cost_fig4(g_out);
            return do_simulate("", g_preset, g_out);
        });
    }

    std::cout << app.help();
    return 2;
}
