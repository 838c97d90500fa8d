#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gyroap/errors.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/states.hpp"

namespace gyroap {

struct SchemeParams {
    double eps = 1.0;
    double dt = 1.0 / 64.0;
    double T = 1.0;
    double fp_tol = 1e-12;      // normalized residual target of the implicit solve
    double fp_tol_abs = 1e-14;  // absolute floor for iterate increments
    int fp_max_iter = 200;      // outer sweeps
    int inner_max_iter = 50;    // position iterations per outer sweep
};

namespace detail {

inline void check_scheme_params(const SchemeParams& p) {
    if (!(p.eps > 0.0)) throw ConfigError("scheme requires eps > 0");
    if (!(p.dt > 0.0)) throw ConfigError("scheme requires dt > 0");
    if (!(p.fp_tol > 0.0) || !(p.fp_tol_abs > 0.0))
        throw ConfigError("scheme tolerances must be positive");
    if (p.fp_max_iter < 1 || p.inner_max_iter < 1)
        throw ConfigError("scheme iteration caps must be positive");
}

} // namespace detail

struct ApStepResult {
    AugmentedState state;
    StepDiagnostics diag;
};

// One step of the midpoint-in-time AP scheme for the augmented system
//
//   (x' - x)/dt = wb/eps - (eb - |wb|^2/2) perp(grad(1/b))(xb)
//   (e' - e)/dt = (phi(x) - phi(x'))/dt
//   (w' - w)/dt = E(xb)/eps - b(xb) perp(wb)/eps^2
//
// where zb denotes the midpoint (z' + z)/2.  The w equation is linear in wb
// given xb, so each outer sweep solves it exactly with cayley_solve and the
// remaining nonlinearity is a mild fixed point in x' (contraction of size
// O(dt), uniformly in eps).  e' is eliminated algebraically, which makes
// e + phi(x) conserved to rounding.
//
// The returned residual is the maximum over the x and w equations of the
// defect in increment form, each normalized by the magnitudes of its own
// terms, so a converged step reports O(fp_tol) for every eps.  The e
// equation is satisfied identically by construction.
inline ApStepResult ap_step(const AugmentedState& s, const SchemeParams& p,
                            const FieldModel& model) {
    detail::check_scheme_params(p);
    if (!model.in_domain(s.x))
        throw DomainEscape("ap_step: state position outside guarded domain");

    const double eps = p.eps;
    const double dt = p.dt;
    const double lam = dt / (eps * eps);

    const double phi_n = model.phi(s.x);
    const double b_n = model.b(s.x);
    const Vec2 E_n = model.E(s.x);

    // Frozen-coefficient initial guess; exact when b and E are constant.
    Vec2 wbar = cayley_solve(0.5 * lam * b_n, s.w + (0.5 * eps * lam) * E_n);
    Vec2 xp = s.x + (dt / eps) * wbar;

    const double inner_tol =
        std::max(p.fp_tol_abs, p.fp_tol * std::max(1.0, norm(s.x)));

    try {
        for (int outer = 1; outer <= p.fp_max_iter; ++outer) {
            // Inner fixed point on x' at frozen wbar, with the midpoint
            // energy eliminated: eb = e - (phi(x') - phi(x))/2.
            xp = s.x + (dt / eps) * wbar;
            bool inner_ok = false;
            for (int inner = 0; inner < p.inner_max_iter; ++inner) {
                const Vec2 xbar = 0.5 * (xp + s.x);
                const double ebar = s.e - 0.5 * (model.phi(xp) - phi_n);
                const Vec2 gib = model.grad_inv_b(xbar);
                const Vec2 xnew =
                    s.x + dt * ((1.0 / eps) * wbar -
                                (ebar - 0.5 * norm2(wbar)) * perp(gib));
                const double incr = norm(xnew - xp);
                xp = xnew;
                if (incr <= inner_tol) { inner_ok = true; break; }
            }
            if (!inner_ok)
                throw FixedPointDiverged("ap_step: inner position iteration did not converge in " +
                                         std::to_string(p.inner_max_iter) + " iterations");

            const Vec2 xbar = 0.5 * (xp + s.x);
            const double b_m = model.b(xbar);
            const Vec2 E_m = model.E(xbar);
            const Vec2 gib_m = model.grad_inv_b(xbar);
            const Vec2 wnew = cayley_solve(0.5 * lam * b_m, s.w + (0.5 * eps * lam) * E_m);

            // Candidate step and residuals of the raw scheme equations in
            // increment form.
            const Vec2 wq = 2.0 * wnew - s.w;
            const double eq = s.e - (model.phi(xp) - phi_n);
            const double ebar_q = 0.5 * (eq + s.e);
            const double coeff = ebar_q - 0.5 * norm2(wnew);

            const Vec2 R1 = xp - s.x - dt * ((1.0 / eps) * wnew - coeff * perp(gib_m));
            const double scale1 = 1.0 + norm(s.x) + (dt / eps) * norm(wnew) +
                                  dt * std::abs(coeff) * norm(gib_m);
            const Vec2 R3 = (wq - s.w) - (dt / eps) * E_m + (lam * b_m) * perp(wnew);
            const double scale3 = 1.0 + norm(wq - s.w) + (dt / eps) * norm(E_m) +
                                  lam * b_m * norm(wnew);
            const double res = std::max(norm(R1) / scale1, norm(R3) / scale3);

            wbar = wnew;
            if (res <= p.fp_tol) {
                ApStepResult out;
                out.state.x = xp;
                out.state.e = eq;
                out.state.w = wq;
                out.state.t = s.t + dt;
                out.diag.fp_iterations = outer;
                out.diag.fp_residual = res;
                out.diag.x_bar = xbar;
                out.diag.e_bar = ebar_q;
                out.diag.w_bar = wnew;
                return out;
            }
        }
    } catch (const DomainEscape& de) {
        // An iterate wandered outside the guarded domain: the implicit solve
        // cannot proceed, which is the same failure surface as divergence.
        throw FixedPointDiverged(std::string("ap_step: iterate left the guarded domain (") +
                                 de.what() + ")");
    }
    throw FixedPointDiverged("ap_step: residual not below tolerance after " +
                             std::to_string(p.fp_max_iter) + " outer iterations");
}

// Advances the augmented state over [0, T] in N = T/dt steps.  Initial data
// for a kinetic state (x0, v0) is e0 = |v0|^2/2, w0 = v0.  Step failures are
// rethrown with the step index and time attached.
inline ApTrajectory ap_solve(const AugmentedState& init, const SchemeParams& p,
                             const FieldModel& model) {
    detail::check_scheme_params(p);
    if (!(p.T >= 0.0)) throw ConfigError("ap_solve requires T >= 0");
    const double n_real = p.T / p.dt;
    const long long n = std::llround(n_real);
    if (std::abs(n_real - static_cast<double>(n)) > 1e-6)
        throw ConfigError("ap_solve: T/dt = " + std::to_string(n_real) +
                          " is not an integer number of steps");

    ApTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(n) + 1);
    traj.diags.reserve(static_cast<std::size_t>(n));
    AugmentedState s = init;
    s.t = 0.0;
    traj.states.push_back(s);

    for (long long k = 1; k <= n; ++k) {
        try {
            ApStepResult r = ap_step(s, p, model);
            s = r.state;
            s.t = static_cast<double>(k) * p.dt;
            traj.states.push_back(s);
            traj.diags.push_back(r.diag);
            traj.max_fp_residual = std::max(traj.max_fp_residual, r.diag.fp_residual);
            traj.max_fp_iterations = std::max(traj.max_fp_iterations, r.diag.fp_iterations);
        } catch (const SimError& e) {
            throw SimError(e.kind(), std::string(e.what()) + " [step " + std::to_string(k) +
                                         ", t = " + std::to_string(static_cast<double>(k) * p.dt) +
                                         "]");
        }
    }
    return traj;
}

// Per-step distance between the midpoint energy and midpoint kinetic energy,
// |eb - |wb|^2/2|.  In the drift limit the two coincide, so this series
// measures how far a run sits from the limit regime; it shrinks like the
// square of the step at fixed eps.
inline std::vector<double> ap_limit_probe(const ApTrajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.diags.size());
    for (const StepDiagnostics& d : traj.diags)
        out.push_back(std::abs(d.e_bar - 0.5 * norm2(d.w_bar)));
    return out;
}

} // namespace gyroap
