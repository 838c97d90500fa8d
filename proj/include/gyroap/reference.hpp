#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "gyroap/errors.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/states.hpp"

namespace gyroap {

struct RefSolverConfig {
    // Internal step resolves the fastest gyration:
    // h <= 2*pi*eps^2 / (points_per_gyroperiod * b_ceiling_estimate).
    int points_per_gyroperiod = 40;
    long long max_steps = 100000000;
    double energy_drift_tol = 1e-8;  // relative, checked at emitted samples
    // Baseline resolution for the limit ODE: step no larger than T / limit_min_steps.
    long long limit_min_steps = 16384;
};

namespace detail {

inline void check_ref_config(const RefSolverConfig& cfg) {
    if (cfg.points_per_gyroperiod < 8)
        throw ConfigError("points_per_gyroperiod must be at least 8");
    if (cfg.max_steps < 1) throw ConfigError("max_steps must be positive");
    if (!(cfg.energy_drift_tol > 0.0)) throw ConfigError("energy_drift_tol must be positive");
    if (cfg.limit_min_steps < 1) throw ConfigError("limit_min_steps must be positive");
}

struct PhaseDeriv {
    Vec2 dx, dv;
};

// One classical RK4 step of size h for dz/dt = f(z), z in R^4 packed as (x, v).
template <class F>
inline PhaseState rk4_step_phase(const PhaseState& s, double h, F&& f) {
    PhaseDeriv k1 = f(s.x, s.v);
    PhaseDeriv k2 = f(s.x + 0.5 * h * k1.dx, s.v + 0.5 * h * k1.dv);
    PhaseDeriv k3 = f(s.x + 0.5 * h * k2.dx, s.v + 0.5 * h * k2.dv);
    PhaseDeriv k4 = f(s.x + h * k3.dx, s.v + h * k3.dv);
    PhaseState out;
    out.x = s.x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.v = s.v + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.t = s.t + h;
    return out;
}

} // namespace detail

// Integrates the stiff system
//   dx/dt = v / eps,    dv/dt = E(x)/eps - b(x) perp(v) / eps^2
// with fixed-step RK4 and returns n_out + 1 samples at t = k*T/n_out.
// Internal steps subdivide each sample interval exactly, so emitted states
// are never interpolated.  Total energy |v|^2/2 + phi(x) is monitored at the
// samples; drift beyond cfg.energy_drift_tol aborts the run.
inline StiffTrajectory reference_solve_stiff(const PhaseState& init, double eps, double T,
                                             long long n_out, const FieldModel& model,
                                             const RefSolverConfig& cfg = {}) {
    detail::check_ref_config(cfg);
    if (!(eps > 0.0)) throw ConfigError("reference_solve_stiff requires eps > 0");
    if (!(T > 0.0)) throw ConfigError("reference_solve_stiff requires T > 0");
    if (n_out < 1) throw ConfigError("reference_solve_stiff requires n_out >= 1");
    if (!model.in_domain(init.x))
        throw DomainEscape("stiff reference: initial position outside guarded domain");

    const double dt_out = T / static_cast<double>(n_out);
    const double h_target =
        2.0 * std::numbers::pi * eps * eps /
        (static_cast<double>(cfg.points_per_gyroperiod) * model.b_ceiling_estimate());
    const long long m = std::max<long long>(
        1, static_cast<long long>(std::ceil(dt_out / h_target * (1.0 - 1e-12))));
    if (m > cfg.max_steps / n_out)
        throw StepBudgetExceeded("stiff reference needs " + std::to_string(m) + " x " +
                                 std::to_string(n_out) + " steps, budget " +
                                 std::to_string(cfg.max_steps));
    const double h = dt_out / static_cast<double>(m);

    auto f = [&](Vec2 x, Vec2 v) {
        return detail::PhaseDeriv{
            (1.0 / eps) * v,
            (1.0 / eps) * model.E(x) - (model.b(x) / (eps * eps)) * perp(v)};
    };

    StiffTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(n_out) + 1);
    PhaseState s = init;
    s.t = 0.0;
    traj.states.push_back(s);

    const double H0 = 0.5 * norm2(init.v) + model.phi(init.x);
    for (long long k = 1; k <= n_out; ++k) {
        for (long long j = 0; j < m; ++j) s = detail::rk4_step_phase(s, h, f);
        s.t = static_cast<double>(k) * dt_out;
        const double H = 0.5 * norm2(s.v) + model.phi(s.x);
        const double drift = std::abs(H - H0) / (1.0 + std::abs(H0));
        traj.max_energy_drift = std::max(traj.max_energy_drift, drift);
        if (drift > cfg.energy_drift_tol)
            throw EnergyDriftExceeded("stiff reference: relative energy drift " +
                                      std::to_string(drift) + " at t=" + std::to_string(s.t));
        traj.states.push_back(s);
        traj.internal_steps += m;
    }
    return traj;
}

// Integrates the drift limit system
//   dy/dt = -perp(E)/b (y) - g perp(grad(1/b))(y)
// with RK4, enforcing the energy relation algebraically at every stage:
//   g(y) = g0 - (phi(y) - phi(y0)).
// By construction g_n + phi(y_n) is constant to rounding.  Samples land at
// t = k*T/n_out; the step never exceeds T / cfg.limit_min_steps.
inline LimitRefTrajectory reference_solve_limit(const LimitState& init, double T, long long n_out,
                                                const FieldModel& model,
                                                const RefSolverConfig& cfg = {}) {
    detail::check_ref_config(cfg);
    if (!(T > 0.0)) throw ConfigError("reference_solve_limit requires T > 0");
    if (n_out < 1) throw ConfigError("reference_solve_limit requires n_out >= 1");
    if (!model.in_domain(init.y))
        throw DomainEscape("limit reference: initial position outside guarded domain");

    const double g0 = init.g;
    const double phi0 = model.phi(init.y);
    auto g_of = [&](Vec2 y) { return g0 - (model.phi(y) - phi0); };
    auto rhs = [&](Vec2 y) {
        return model.exb_drift(y) - g_of(y) * perp(model.grad_inv_b(y));
    };

    const double dt_out = T / static_cast<double>(n_out);
    const double h_target = T / static_cast<double>(cfg.limit_min_steps);
    const long long m = std::max<long long>(
        1, static_cast<long long>(std::ceil(dt_out / h_target * (1.0 - 1e-12))));
    if (m > cfg.max_steps / n_out)
        throw StepBudgetExceeded("limit reference exceeds step budget");
    const double h = dt_out / static_cast<double>(m);

    LimitRefTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(n_out) + 1);
    LimitState s = init;
    s.t = 0.0;
    traj.states.push_back(s);

    Vec2 y = init.y;
    for (long long k = 1; k <= n_out; ++k) {
        for (long long j = 0; j < m; ++j) {
            Vec2 k1 = rhs(y);
            Vec2 k2 = rhs(y + 0.5 * h * k1);
            Vec2 k3 = rhs(y + 0.5 * h * k2);
            Vec2 k4 = rhs(y + h * k3);
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        s.y = y;
        s.g = g_of(y);
        s.t = static_cast<double>(k) * dt_out;
        traj.states.push_back(s);
        traj.internal_steps += m;
    }
    return traj;
}

} // namespace gyroap
