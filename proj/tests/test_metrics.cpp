#include <catch2/catch_amalgamated.hpp>

#include <omst/metrics.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

using namespace omst;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TabulatedSchedule straight_line_table() {
    std::istringstream in("t,g1,g2\n0,1,1\n1,2,2\n2,3,3\n3,4,4\n");
    return TabulatedSchedule::from_csv(in);
}

} // namespace

TEST_CASE("populations are squared magnitudes", "[metrics]") {
    const Vector3c v(complex(0.6, 0.0), complex(0.0, 0.8), complex(0.0, 0.0));
    const auto p = populations(v);
    CHECK(p[0] == 0.6 * 0.6);
    CHECK(p[1] == 0.8 * 0.8);
    CHECK(p[2] == 0.0);
    ModeState s;
    s.a1 = complex(0.6, 0.0);
    s.b = complex(0.0, 0.8);
    s.a2 = complex(0.0, 0.0);
    CHECK(populations(s)[1] == p[1]);
}

TEST_CASE("transfer fidelity reads the final population", "[metrics]") {
    Trajectory traj;
    traj.times = {0.0, 1.0};
    traj.states = {Vector3c::Zero(), Vector3c::Zero()};
    traj.populations = {{1.0, 0.0, 0.0}, {0.1, 0.2, 0.7}};
    CHECK(transfer_fidelity(traj, 2) == 0.7);
    CHECK(transfer_fidelity(traj, 0) == 0.1);
    CHECK_THROWS_AS(transfer_fidelity(traj, 3), invalid_argument_error);
    CHECK_THROWS_AS(transfer_fidelity(traj, -1), invalid_argument_error);
    CHECK_THROWS_AS(transfer_fidelity(Trajectory{}, 2), invalid_argument_error);
}

TEST_CASE("eigenvector sensitivities split two to one", "[metrics]") {
    const MuValues m = mu_values(1.0, 1.0, 1.0, 0.0); // rotation rate 1/2
    CHECK(m.mu[0] == 0.125);
    CHECK(m.mu[1] == 0.125);
    CHECK(m.mu[2] == 0.25);
    CHECK(m.sum() == 0.5);
    CHECK_THROWS_AS(mu_values(0.0, 0.0, 1.0, 1.0), degenerate_couplings_error);
    CHECK_THROWS_AS(mu_values(std::nan(""), 1.0, 0.0, 0.0), invalid_argument_error);
}

TEST_CASE("spectral cost closed form and its domain edge", "[metrics]") {
    CHECK(cost_instantaneous_spectral(1.0, 0.0, 0.0) == std::sqrt(2.0));
    CHECK(cost_instantaneous_spectral(1.0, 1.0, 0.0) == 2.0);
    try {
        cost_instantaneous_spectral(1.0, 0.0, 2.0); // damping term wins
        FAIL("expected domain_error");
    } catch (const domain_error& e) {
        CHECK(e.radicand == -1.0);
    }
    const PulseSample s{3.0, 4.0, 0.0, 0.0};
    CHECK_THAT(cost_instantaneous_spectral(s, 0.0), WithinRel(std::sqrt(50.0), 1e-15));
    CHECK_THROWS_AS(cost_instantaneous_spectral(std::nan(""), 0.0, 0.0),
                    invalid_argument_error);
}

TEST_CASE("frobenius cost matches its closed form", "[metrics]") {
    const PulseSample s{1.0, 1.0, 1.0, 0.0}; // rotation rate 1/2
    // 2*g0^2 + theta^2/2 = 4 + 0.125
    CHECK_THAT(cost_instantaneous_frobenius(SystemParams::undamped(), s),
               WithinRel(std::sqrt(4.125), 1e-14));
    // uniform damping adds 3*(kappa/2)^2 = 3
    CHECK_THAT(cost_instantaneous_frobenius(SystemParams::uniform_damping(2.0), s),
               WithinRel(std::sqrt(7.125), 1e-14));
}

TEST_CASE("simpson rule is exact through cubics", "[metrics]") {
    auto cubic = [](double x) { return x * x * x; };
    CHECK_THAT(detail::simpson(cubic, 0.0, 2.0, 2), WithinRel(4.0, 1e-15));
    CHECK_THAT(detail::simpson(cubic, 0.0, 2.0, 8), WithinRel(4.0, 1e-14));
    auto wave = [](double x) { return std::exp(-x) * std::sin(10.0 * x); };
    const double exact =
        (10.0 - std::exp(-1.0) * (std::sin(10.0) + 10.0 * std::cos(10.0))) / 101.0;
    CHECK_THAT(detail::simpson_adaptive(wave, 0.0, 1.0, 4, 1e-10), WithinRel(exact, 1e-8));
}

TEST_CASE("averaged cost of the constant-gap ramp", "[metrics]") {
    // With g1 = A sin(w t), g2 = A cos(w t) both readings are constant in
    // time, so the average equals the instantaneous value.
    const InvariantSchedule sched{0.1, 1.0};
    const SystemParams p = SystemParams::undamped();
    CHECK_THAT(cost_integral(Schedule{sched}, p, 0.0, 1.0, CostVariant::spectral),
               WithinRel(22.251481955563836, 1e-9));
    CHECK_THAT(cost_integral(Schedule{sched}, p, 0.0, 1.0, CostVariant::frobenius),
               WithinRel(22.168160671746641, 1e-9));
    CHECK_THAT(cost_integral(Schedule{sched}, p, 1.0, CostVariant::frobenius),
               WithinRel(22.168160671746641, 1e-9));
    const SystemParams lopsided{0.1, 0.3, 0.2};
    CHECK_THROWS_AS(cost_integral(Schedule{sched}, lopsided, 0.0, 1.0, CostVariant::spectral),
                    unsupported_configuration_error);
    CHECK_NOTHROW(cost_integral(Schedule{sched}, lopsided, 0.0, 1.0, CostVariant::frobenius));
    CHECK_THROWS_AS(cost_integral(Schedule{sched}, p, 1.0, 1.0, CostVariant::spectral),
                    invalid_argument_error);
}

TEST_CASE("normalized cost curve flattens out at large coupling", "[metrics]") {
    std::vector<double> grid(391);
    for (size_t i = 0; i < grid.size(); ++i)
        grid[i] = 0.05 * (static_cast<double>(i) + 10.0);

    const auto flat = fig4_curve(grid, 0.0);
    REQUIRE(flat.size() == 391);
    CHECK(flat.front().first == 0.5);
    CHECK_THAT(flat.front().second, WithinRel(1.4141870456202037, 1e-14));
    CHECK_THAT(flat.back().second, WithinRel(1.4141870456202037, 1e-14));
    double spread = 0.0;
    for (const auto& [g0, c] : flat)
        spread = std::max(spread, std::abs(c - flat.front().second));
    CHECK(spread <= 1e-13);

    const auto steep = fig4_curve(grid, 0.3 * std::numbers::pi);
    CHECK_THAT(steep.front().second, WithinRel(3.0176216079529152, 1e-14));
    bool decreasing = true;
    for (size_t i = 1; i < steep.size(); ++i)
        decreasing = decreasing && steep[i].second < steep[i - 1].second;
    CHECK(decreasing);
    CHECK(steep.back().second > flat.back().second); // still above the floor

    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(fig4_curve(bad, 0.0), invalid_argument_error);
}

TEST_CASE("cost report flags the reading mismatch", "[metrics]") {
    const InvariantSchedule sched{0.1, 1.0};
    const CostReport r = cost_report(Schedule{sched}, SystemParams::undamped(), 0.0, 1.0);
    CHECK(r.discrepancy_flag);
    CHECK_THAT(r.c_spectral, WithinRel(22.251481955563836, 1e-8));
    CHECK_THAT(r.c_frobenius, WithinRel(22.168160671746641, 1e-8));
    REQUIRE(r.times.size() == 2001);
    CHECK(r.times.front() == 0.0);
    CHECK(r.times.back() == 1.0);
    REQUIRE(r.instantaneous_spectral.size() == 2001);
    REQUIRE(r.instantaneous_frobenius.size() == 2001);
    const auto j = r.to_json();
    CHECK(j.contains("C_frobenius"));
    CHECK(j.contains("C_spectral"));
    CHECK(j["discrepancy_flag"].get<bool>());
    CHECK(j["nodes"].get<size_t>() == 2001);
}

TEST_CASE("identical couplings keep both readings in agreement", "[metrics]") {
    // g1 == g2 pins the mixing angle, so the rotation-rate terms vanish and
    // the two readings coincide.
    const Schedule sched{straight_line_table()};
    const CostReport r = cost_report(sched, SystemParams::undamped(), 0.0, 3.0, 501);
    CHECK_FALSE(r.discrepancy_flag);
    CHECK_THAT(r.c_spectral, WithinRel(r.c_frobenius, 1e-12));
    // both readings reduce to 2*(t+1); its average over [0,3] is 5
    CHECK_THAT(r.c_frobenius, WithinRel(5.0, 1e-10));
}
