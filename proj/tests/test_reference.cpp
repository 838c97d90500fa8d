#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gyroap/diagnostics.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/reference.hpp"
#include "support/oracles.hpp"

using namespace gyroap;
using Catch::Approx;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

TEST_CASE("stiff solver reproduces uniform-field gyration") {
    UniformField f(1.0, UniformField::Potential::Zero);
    PhaseState init{{0.0, 0.0}, {1.0, 0.0}};

    // eps = 1, b = 1: v rotates clockwise with period 2*pi and
    // x(t) = x0 + (sin t, cos t - 1).
    StiffTrajectory traj = reference_solve_stiff(init, 1.0, two_pi, 256, f);
    REQUIRE(traj.states.size() == 257);

    const PhaseState& end = traj.back();
    REQUIRE(end.v.x == Approx(1.0).margin(1e-6));
    REQUIRE(end.v.y == Approx(0.0).margin(1e-6));
    REQUIRE(end.x.x == Approx(0.0).margin(1e-6));
    REQUIRE(end.x.y == Approx(0.0).margin(1e-6));

    // Speed is conserved along the whole sampled orbit.
    for (const PhaseState& s : traj.states)
        REQUIRE(norm(s.v) == Approx(1.0).margin(1e-8));

    // Quarter period spot check: v(pi/2) = (0, -1).
    const PhaseState& q = traj.states[64];
    REQUIRE(q.v.x == Approx(0.0).margin(1e-6));
    REQUIRE(q.v.y == Approx(-1.0).margin(1e-6));
}

TEST_CASE("stiff solver rejects out-of-domain initial data") {
    DiscField f;
    PhaseState init{{11.0, 0.0}, {1.0, 0.0}};
    REQUIRE_THROWS_AS(reference_solve_stiff(init, 0.5, 1.0, 8, f), DomainEscape);
}

TEST_CASE("stiff solver step budget") {
    DiscField f;
    PhaseState init{{2.0, 2.0}, {3.0, 3.0}};
    RefSolverConfig cfg;
    cfg.max_steps = 10;
    REQUIRE_THROWS_AS(reference_solve_stiff(init, 0.5, 1.0, 16, f, cfg), StepBudgetExceeded);
}

TEST_CASE("stiff solver flags runaway energy drift at minimum resolution") {
    DiscField f;
    PhaseState init{{2.0, 2.0}, {3.0, 3.0}};
    RefSolverConfig cfg;
    cfg.points_per_gyroperiod = 8;
    REQUIRE_THROWS_AS(reference_solve_stiff(init, 0.125, 1.0, 4, f, cfg), EnergyDriftExceeded);

    RefSolverConfig bad;
    bad.points_per_gyroperiod = 7;
    REQUIRE_THROWS_AS(reference_solve_stiff(init, 0.5, 1.0, 4, f, bad), ConfigError);
}

TEST_CASE("stiff solver self-convergence on the disc field") {
    DiscField f;
    PhaseState init{{2.0, 2.0}, {3.0, 3.0}};
    const double eps = 0.5;

    RefSolverConfig c40;  // defaults
    RefSolverConfig c80;
    c80.points_per_gyroperiod = 80;

    StiffTrajectory t40 = reference_solve_stiff(init, eps, 1.0, 16, f, c40);
    StiffTrajectory t80 = reference_solve_stiff(init, eps, 1.0, 16, f, c80);

    const PhaseState a = t40.back();
    const PhaseState b = t80.back();
    REQUIRE(norm(a.x - b.x) < 1e-7);
    REQUIRE(std::abs(0.5 * norm2(a.v) - 0.5 * norm2(b.v)) < 1e-7);

    REQUIRE(t40.max_energy_drift <= 1e-8);
    REQUIRE(t80.max_energy_drift <= t40.max_energy_drift + 1e-12);
}

TEST_CASE("stiff solver terminal error decays at fourth order") {
    DiscField f;
    PhaseState init{{2.0, 2.0}, {3.0, 3.0}};
    const double eps = 0.5;

    RefSolverConfig truth;
    truth.points_per_gyroperiod = 320;
    const PhaseState ref = reference_solve_stiff(init, eps, 1.0, 1, f, truth).back();

    auto terminal_err = [&](int ppg) {
        RefSolverConfig c;
        c.points_per_gyroperiod = ppg;
        const PhaseState s = reference_solve_stiff(init, eps, 1.0, 1, f, c).back();
        return std::sqrt(norm2(s.x - ref.x) + norm2(s.v - ref.v));
    };

    const double e20 = terminal_err(20);
    const double e40 = terminal_err(40);
    const double e80 = terminal_err(80);
    REQUIRE(e20 / e40 > 10.0);
    REQUIRE(e20 / e40 < 24.0);
    REQUIRE(e40 / e80 > 10.0);
    REQUIRE(e40 / e80 < 24.0);
}

TEST_CASE("limit solver keeps a flat-potential state fixed") {
    UniformField f(2.0, UniformField::Potential::Zero);
    LimitState init{{1.5, -0.5}, 3.0};
    LimitRefTrajectory traj = reference_solve_limit(init, 1.0, 8, f);
    for (const LimitState& s : traj.states) {
        REQUIRE(s.y.x == 1.5);
        REQUIRE(s.y.y == -0.5);
        REQUIRE(s.g == 3.0);
    }
}

TEST_CASE("limit solver reproduces uniform quadratic rotation") {
    // b = b0, phi quadratic: dy/dt = perp(y)/b0, a rigid rotation with
    // angular rate 1/b0; g stays constant because |y| does.
    const double b0 = 2.0;
    UniformField f(b0, UniformField::Potential::Quadratic);
    LimitState init{{1.0, 0.0}, 4.0};
    const double T = 1.0;
    LimitRefTrajectory traj = reference_solve_limit(init, T, 16, f);
    const double ang = T / b0;
    const LimitState& end = traj.back();
    REQUIRE(end.y.x == Approx(std::cos(ang)).margin(1e-10));
    REQUIRE(end.y.y == Approx(std::sin(ang)).margin(1e-10));
    REQUIRE(end.g == Approx(4.0).margin(1e-12));
}

TEST_CASE("limit solver self-convergence on the disc field") {
    DiscField f;
    LimitState init{{2.0, 2.0}, 9.0};

    RefSolverConfig coarse;  // limit_min_steps = 2^14
    RefSolverConfig fine;
    fine.limit_min_steps = 32768;

    const LimitState a = reference_solve_limit(init, 1.0, 16, f, coarse).back();
    const LimitState b = reference_solve_limit(init, 1.0, 16, f, fine).back();
    REQUIRE(norm(a.y - b.y) < 1e-9);
    REQUIRE(std::abs(a.g - b.g) < 1e-9);
}

TEST_CASE("limit solver conserves g + phi(y) to rounding") {
    DiscField f;
    LimitState init{{2.0, 2.0}, 9.0};
    LimitRefTrajectory traj = reference_solve_limit(init, 1.0, 64, f);
    const double c0 = init.g + f.phi(init.y);
    for (const LimitState& s : traj.states)
        REQUIRE(s.g + f.phi(s.y) == Approx(c0).margin(1e-12));
}

TEST_CASE("limit solver fixes the origin") {
    DiscField f;
    LimitState init{{0.0, 0.0}, 0.0};
    LimitRefTrajectory traj = reference_solve_limit(init, 1.0, 8, f);
    REQUIRE(traj.back().y.x == 0.0);
    REQUIRE(traj.back().y.y == 0.0);
    REQUIRE(traj.back().g == 0.0);
}

TEST_CASE("limit solver domain and budget errors") {
    DiscField f;
    REQUIRE_THROWS_AS(reference_solve_limit({{11.0, 0.0}, 1.0}, 1.0, 8, f), DomainEscape);

    RefSolverConfig cfg;
    cfg.max_steps = 100;
    REQUIRE_THROWS_AS(reference_solve_limit({{2.0, 2.0}, 9.0}, 1.0, 8, f, cfg),
                      StepBudgetExceeded);
}
