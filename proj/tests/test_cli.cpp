#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

fs::path test_root() {
    static const fs::path root = [] {
        auto p = fs::temp_directory_path() / ("omst-cli-tests-" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path fresh_dir(const std::string& hint) {
    static std::atomic<int> counter{0};
    auto p = test_root() / (hint + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    REQUIRE(out.good());
    return p;
}

CliResult run_cli(const std::string& args) {
    static std::atomic<int> logn{0};
    const fs::path log = test_root() / ("log-" + std::to_string(logn.fetch_add(1)) + ".txt");
    const std::string cmd =
        std::string("'") + OMST_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult r;
    if (WIFEXITED(rc)) r.exit_code = WEXITSTATUS(rc);
    r.output = slurp(log);
    return r;
}

std::string nth_line(const std::string& text, size_t idx) {
    std::istringstream in(text);
    std::string line;
    for (size_t i = 0; i <= idx; ++i)
        if (!std::getline(in, line)) return {};
    return line;
}

size_t line_count(const std::string& text) {
    size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("argument and config mistakes exit with code 2", "[cli]") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("sweep").exit_code == 2); // spec argument is required

    const auto dir = fresh_dir("errors");
    const auto bad_preset = run_cli("simulate --preset fig9 -o '" + dir.string() + "'");
    CHECK(bad_preset.exit_code == 2);
    CHECK(bad_preset.output.find("config error") != std::string::npos);

    CHECK(run_cli("simulate").exit_code == 2); // neither config nor preset
    CHECK(run_cli("simulate '" + (dir / "missing.json").string() + "'").exit_code == 2);

    const auto cfg = write_file(dir, "unknown-key.json", R"({"protocol":"sin4","zeta":1.0})");
    const auto unknown = run_cli("simulate '" + cfg.string() + "'");
    CHECK(unknown.exit_code == 2);
    CHECK(unknown.output.find("zeta") != std::string::npos);
}

TEST_CASE("validate runs the built-in property suite", "[cli]") {
    const auto listed = run_cli("validate --list");
    CHECK(listed.exit_code == 0);
    CHECK(line_count(listed.output) == 16);
    CHECK(listed.output.find("rk4-order") != std::string::npos);
    CHECK(listed.output.find("cost-identities") != std::string::npos);

    const auto full = run_cli("validate");
    CHECK(full.exit_code == 0);
    CHECK(full.output.find("FAIL") == std::string::npos);
    CHECK(full.output.find("16/16 checks passed") != std::string::npos);

    // the hidden testing aid forces the convergence check to miss
    const auto forced = run_cli("validate --debug-convergence-dt 0.2");
    CHECK(forced.exit_code == 1);
    CHECK(forced.output.find("FAIL") != std::string::npos);
}

TEST_CASE("preset simulation emits deterministic artifacts", "[cli]") {
    const auto dir1 = fresh_dir("fig2-a");
    const auto dir2 = fresh_dir("fig2-b");
    const auto first = run_cli("simulate --preset fig2 -o '" + dir1.string() + "'");
    REQUIRE(first.exit_code == 0);
    CHECK(first.output.find("preset fig2") != std::string::npos);
    REQUIRE(run_cli("simulate --preset fig2 -o '" + dir2.string() + "'").exit_code == 0);

    const std::string traj = slurp(dir1 / "trajectory.csv");
    CHECK(traj == slurp(dir2 / "trajectory.csv"));
    CHECK(slurp(dir1 / "summary.json") == slurp(dir2 / "summary.json"));
    CHECK(fs::exists(dir1 / "plot.gp"));

    CHECK(nth_line(traj, 0) ==
          "t,re_a1,im_a1,re_b,im_b,re_a2,im_a2,p_a1,p_b,p_a2,g1,g2,theta,cost_frobenius");
    const auto summary = nlohmann::json::parse(slurp(dir1 / "summary.json"));
    CHECK_THAT(summary["fidelity"].get<double>(), WithinAbs(0.96053720718543112, 1e-9));
    CHECK(summary["convergence_estimate"].get<double>() <= 1e-9);
    CHECK(summary["config"]["protocol"] == "invariant");
}

TEST_CASE("the fig4 cost preset writes four curve files", "[cli]") {
    const auto dir = fresh_dir("fig4");
    REQUIRE(run_cli("cost --preset fig4 -o '" + dir.string() + "'").exit_code == 0);
    for (const char* name : {"fig4_theta_0.csv", "fig4_theta_01pi.csv", "fig4_theta_02pi.csv",
                             "fig4_theta_03pi.csv", "fig4.gp"})
        CHECK(fs::exists(dir / name));

    const std::string flat = slurp(dir / "fig4_theta_0.csv");
    CHECK(nth_line(flat, 0) == "g0,cost_over_g0");
    CHECK(nth_line(flat, 1) == "0.5,1.4141870456202037");
    CHECK(line_count(flat) == 392);

    // the bare --preset form routes to the same writer
    const auto dir2 = fresh_dir("fig4-global");
    REQUIRE(run_cli("--preset fig4 -o '" + dir2.string() + "'").exit_code == 0);
    CHECK(slurp(dir2 / "fig4_theta_0.csv") == flat);
}

TEST_CASE("cost subcommand reports both integrals", "[cli]") {
    const auto dir = fresh_dir("cost");
    const auto cfg =
        write_file(dir, "cfg.json", R"({"protocol":"invariant","xi":0.1,"T":1.0})");
    const auto r = run_cli("cost '" + cfg.string() + "' -o '" + dir.string() + "'");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("C_spectral") != std::string::npos);

    const std::string costs = slurp(dir / "costs.csv");
    CHECK(nth_line(costs, 0) == "t,g1,g2,theta,cost_spectral,cost_frobenius");
    CHECK(line_count(costs) == 2002);

    const auto rep = nlohmann::json::parse(slurp(dir / "cost_report.json"));
    CHECK_THAT(rep["C_frobenius"].get<double>(), WithinRel(22.168160671746641, 1e-8));
    CHECK_THAT(rep["C_spectral"].get<double>(), WithinRel(22.251481955563836, 1e-8));
    CHECK(rep["discrepancy_flag"].get<bool>());
    CHECK(rep["config"]["protocol"] == "invariant");
}

TEST_CASE("simulate honors the outputs selection", "[cli]") {
    const auto dir = fresh_dir("outputs");
    const auto cfg = write_file(
        dir, "cfg.json", R"({"protocol":"invariant","xi":0.1,"T":1.0,"outputs":["cost"]})");
    REQUIRE(run_cli("simulate '" + cfg.string() + "' -o '" + dir.string() + "'").exit_code ==
            0);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "costs.csv"));
    CHECK(fs::exists(dir / "cost_report.json"));
    CHECK_FALSE(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("sweep writes one row per grid point plus point summaries", "[cli]") {
    const auto dir = fresh_dir("sweep");
    const auto spec = write_file(dir, "spec.json", R"({
        "parameter": "gamma",
        "grid": [0.0, 0.5],
        "base": {"protocol": "invariant", "xi": 0.1, "T": 1.0}
    })");
    REQUIRE(run_cli("sweep '" + spec.string() + "' -o '" + dir.string() + "' -j 2").exit_code ==
            0);

    const std::string csv = slurp(dir / "summary.csv");
    CHECK(nth_line(csv, 0) ==
          "index,value,status,p_a1,p_b,p_a2,fidelity,cost_spectral,cost_frobenius");
    CHECK(line_count(csv) == 3);
    CHECK(nth_line(csv, 1).rfind("0,0,ok,", 0) == 0);
    CHECK(nth_line(csv, 2).rfind("1,0.5,ok,", 0) == 0);

    const auto p0 = nlohmann::json::parse(slurp(dir / "point_0000.json"));
    const auto p1 = nlohmann::json::parse(slurp(dir / "point_0001.json"));
    const double f0 = p0["fidelity"].get<double>();
    const double f1 = p1["fidelity"].get<double>();
    CHECK_THAT(f1 / f0, WithinRel(std::exp(-0.5), 1e-9)); // uniform damping factor
}

TEST_CASE("stiff configs exit through the divergence path", "[cli]") {
    const auto dir = fresh_dir("divergence");
    const auto cfg = write_file(dir, "cfg.json",
                                R"({"protocol":"sin4","G":1e8,"tau":0.1,"T":1.0,"dt":0.01})");
    const auto r = run_cli("simulate '" + cfg.string() + "' -o '" + dir.string() + "'");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("divergence") != std::string::npos);
    CHECK(r.output.find("last good t") != std::string::npos);
}

TEST_CASE("impossible cost requests exit through the domain path", "[cli]") {
    const auto dir = fresh_dir("domain");
    const auto cfg = write_file(dir, "cfg.json",
                                R"({"protocol":"sin4","G":1.0,"tau":0.1,"T":1.0,"gamma":10.0})");
    const auto r = run_cli("cost '" + cfg.string() + "' -o '" + dir.string() + "'");
    CHECK(r.exit_code == 4);
    CHECK(r.output.find("domain error") != std::string::npos);
    CHECK(r.output.find("radicand") != std::string::npos);

    std::error_code ec;
    fs::remove_all(test_root(), ec); // scratch space from every [cli] case
}
