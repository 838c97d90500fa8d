#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "gyroap/errors.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/states.hpp"

namespace gyroap {

// Parameters of the midpoint scheme for the drift limit system.  The limit
// dynamics carry no fast scale, so there is deliberately no eps here.
struct LimitSchemeParams {
    double dt = 1.0 / 64.0;
    double T = 1.0;
    double fp_tol = 1e-12;
    double fp_tol_abs = 1e-14;
    int fp_max_iter = 200;
};

struct LimitStepResult {
    LimitState state;
    int fp_iterations = 0;
    double fp_residual = 0.0;
};

// One midpoint step of
//   (y' - y)/dt = -perp(E)/b (yb) - gb perp(grad(1/b))(yb)
//   (g' - g)/dt = -(phi(y') - phi(y))/dt
// with yb = (y' + y)/2 and gb = (g' + g)/2 = g - (phi(y') - phi(y))/2.
// Picard iteration from y' = y converges at rate O(dt); g' follows
// algebraically, so g + phi(y) is conserved to rounding.
inline LimitStepResult limit_step(const LimitState& s, const LimitSchemeParams& p,
                                  const FieldModel& model) {
    if (!(p.dt > 0.0)) throw ConfigError("limit_step requires dt > 0");
    if (!(p.fp_tol > 0.0) || !(p.fp_tol_abs > 0.0))
        throw ConfigError("limit_step tolerances must be positive");
    if (!model.in_domain(s.y))
        throw DomainEscape("limit_step: state position outside guarded domain");

    const double phi_n = model.phi(s.y);
    auto rhs_at = [&](Vec2 yp) {
        const Vec2 ybar = 0.5 * (yp + s.y);
        const double gbar = s.g - 0.5 * (model.phi(yp) - phi_n);
        return model.exb_drift(ybar) - gbar * perp(model.grad_inv_b(ybar));
    };

    const double tol = std::max(p.fp_tol_abs, p.fp_tol * std::max(1.0, norm(s.y)));
    Vec2 yp = s.y;
    int iters = 0;
    try {
        bool ok = false;
        for (int it = 1; it <= p.fp_max_iter; ++it) {
            const Vec2 ynew = s.y + p.dt * rhs_at(yp);
            const double incr = norm(ynew - yp);
            yp = ynew;
            iters = it;
            if (incr <= tol) { ok = true; break; }
        }
        if (!ok)
            throw FixedPointDiverged("limit_step: no convergence in " +
                                     std::to_string(p.fp_max_iter) + " iterations");

        LimitStepResult out;
        out.state.y = yp;
        out.state.g = s.g - (model.phi(yp) - phi_n);
        out.state.t = s.t + p.dt;
        out.fp_iterations = iters;
        out.fp_residual = norm(s.y + p.dt * rhs_at(yp) - yp) / (1.0 + norm(s.y));
        return out;
    } catch (const DomainEscape& de) {
        throw FixedPointDiverged(std::string("limit_step: iterate left the guarded domain (") +
                                 de.what() + ")");
    }
}

// Advances the limit state over [0, T] in N = T/dt steps.
inline LimitSchemeTrajectory limit_solve(const LimitState& init, const LimitSchemeParams& p,
                                         const FieldModel& model) {
    if (!(p.T >= 0.0)) throw ConfigError("limit_solve requires T >= 0");
    const double n_real = p.T / p.dt;
    const long long n = std::llround(n_real);
    if (std::abs(n_real - static_cast<double>(n)) > 1e-6)
        throw ConfigError("limit_solve: T/dt is not an integer number of steps");

    LimitSchemeTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(n) + 1);
    LimitState s = init;
    s.t = 0.0;
    traj.states.push_back(s);

    for (long long k = 1; k <= n; ++k) {
        try {
            LimitStepResult r = limit_step(s, p, model);
            s = r.state;
            s.t = static_cast<double>(k) * p.dt;
            traj.states.push_back(s);
            traj.max_fp_residual = std::max(traj.max_fp_residual, r.fp_residual);
            traj.max_fp_iterations = std::max(traj.max_fp_iterations, r.fp_iterations);
        } catch (const SimError& e) {
            throw SimError(e.kind(), std::string(e.what()) + " [step " + std::to_string(k) +
                                         ", t = " + std::to_string(static_cast<double>(k) * p.dt) +
                                         "]");
        }
    }
    return traj;
}

} // namespace gyroap
