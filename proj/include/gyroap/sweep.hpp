#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "gyroap/config.hpp"
#include "gyroap/diagnostics.hpp"
#include "gyroap/rate_fit.hpp"
#include "gyroap/reference.hpp"
#include "gyroap/scheme_ap.hpp"
#include "gyroap/scheme_limit.hpp"

namespace gyroap {

// One error measurement: scheme vs comparand at a single (eps, dt), for one
// variable set.  per_step holds the step-by-step errors (indices 1..N) so the
// reported mean can be re-derived from emitted artifacts.
struct SweepRow {
    double eps = 0.0;
    double dt = 0.0;
    double lambda = 0.0;
    Regime regime = Regime::Coarse;
    VariableSet variable_set = VariableSet::XE;
    Comparison comparison = Comparison::Convergence;
    double l1_error = std::numeric_limits<double>::quiet_NaN();
    double max_fp_residual = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::vector<double> per_step;
};

struct SweepTable {
    Comparison mode = Comparison::Convergence;
    std::vector<SweepRow> rows;
};

namespace detail {

inline SlowState slow_of(const AugmentedState& s) { return {s.x, s.e}; }
inline SlowState slow_of(const PhaseState& s) { return {s.x, 0.5 * norm2(s.v)}; }
inline SlowState slow_of(const LimitState& s) { return {s.y, s.g}; }
inline SlowState slow_of(const GuidingCenterState& s) { return {s.x_gc, s.e_gc}; }

template <class Comparand>
std::vector<double> xe_error_series(const ApTrajectory& ap, const Comparand& ref) {
    const std::size_t n = ap.steps();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i)
        out.push_back(norm_of(slow_of(ap.states[i]) - slow_of(ref.states[i])));
    return out;
}

// Guiding-center error against the stiff reference: both sides are mapped
// through the transform before comparing.
inline std::vector<double> gc_error_series(const ApTrajectory& ap,
                                           const StiffTrajectory& ref, double eps,
                                           const FieldModel& f) {
    const std::size_t n = ap.steps();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const PhaseState& r = ref.states[i];
        GuidingCenterState a = guiding_center(ap.states[i], eps, f);
        GuidingCenterState b = guiding_center(r.x, 0.5 * norm2(r.v), r.v, eps, f);
        out.push_back(norm_of(slow_of(a) - slow_of(b)));
    }
    return out;
}

// Guiding-center error against a limit trajectory (already slow variables).
template <class Comparand>
std::vector<double> gc_error_series_limit(const ApTrajectory& ap,
                                          const Comparand& ref, double eps,
                                          const FieldModel& f) {
    const std::size_t n = ap.steps();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        GuidingCenterState a = guiding_center(ap.states[i], eps, f);
        out.push_back(norm_of(slow_of(a) - slow_of(ref.states[i])));
    }
    return out;
}

// Speed discrepancy |  |w^n| - |v(t_n)|  |; the augmented velocity variable
// carries the right speed even when its phase has decohered, so this isolates
// the modulus error from the O(1) phase error.
inline std::vector<double> w_error_series(const ApTrajectory& ap,
                                          const StiffTrajectory& ref) {
    const std::size_t n = ap.steps();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i)
        out.push_back(std::abs(norm(ap.states[i].w) - norm(ref.states[i].v)));
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline std::vector<SweepRow> compute_cell(const SweepConfig& cfg, Comparison mode,
                                          double eps, double dt) {
    // The limit model carries no velocity variable, so "w" rows only exist in
    // convergence sweeps.
    std::vector<VariableSet> vars;
    for (VariableSet v : cfg.variables)
        if (mode == Comparison::Convergence || v != VariableSet::W)
            vars.push_back(v);

    std::vector<SweepRow> rows;
    if (vars.empty()) return rows;

    auto blank = [&](VariableSet v) {
        SweepRow r;
        r.eps = eps;
        r.dt = dt;
        r.lambda = dt / (eps * eps);
        r.regime = classify_regime(eps, dt);
        r.variable_set = v;
        r.comparison = mode;
        return r;
    };
    auto mark_all = [&](const std::string& status) {
        rows.clear();
        for (VariableSet v : vars) {
            SweepRow r = blank(v);
            r.status = status;
            rows.push_back(r);
        }
    };

    auto field = cfg.field.make();
    const long long n_out = std::llround(cfg.T / dt);
    const double e0 = 0.5 * norm2(cfg.v0);

    ApTrajectory ap;
    try {
        SchemeParams sp;
        sp.eps = eps;
        sp.dt = dt;
        sp.T = cfg.T;
        ap = ap_solve({cfg.x0, e0, cfg.v0, 0.0}, sp, *field);
    } catch (const SimError& e) {
        mark_all(std::string("failed:") + err_token(e.kind()));
        return rows;
    }

    if (mode == Comparison::Convergence) {
        StiffTrajectory ref;
        try {
            ref = reference_solve_stiff({cfg.x0, cfg.v0, 0.0}, eps, cfg.T, n_out,
                                        *field, RefSolverConfig{});
        } catch (const StepBudgetExceeded&) {
            mark_all("skipped:step-budget");
            return rows;
        } catch (const SimError& e) {
            mark_all(std::string("failed:") + err_token(e.kind()));
            return rows;
        }
        for (VariableSet v : vars) {
            SweepRow r = blank(v);
            try {
                if (v == VariableSet::XE) r.per_step = xe_error_series(ap, ref);
                else if (v == VariableSet::GC)
                    r.per_step = gc_error_series(ap, ref, eps, *field);
                else r.per_step = w_error_series(ap, ref);
                r.l1_error = mean_of(r.per_step);
                r.max_fp_residual = ap.max_fp_residual;
            } catch (const SimError& e) {
                r.status = std::string("failed:") + err_token(e.kind());
            }
            rows.push_back(r);
        }
        return rows;
    }

    // Asymptotic modes: (x,e) rows compare against the limit system seeded at
    // the raw data, guiding-center rows against it seeded at the transformed
    // data.
    for (VariableSet v : vars) {
        SweepRow r = blank(v);
        try {
            LimitState seed{cfg.x0, e0, 0.0};
            if (v == VariableSet::GC) {
                GuidingCenterState gc0 =
                    guiding_center(cfg.x0, e0, cfg.v0, eps, *field);
                seed = {gc0.x_gc, gc0.e_gc, 0.0};
            }
            if (mode == Comparison::AsympDiscrete) {
                LimitSchemeParams lp;
                lp.dt = dt;
                lp.T = cfg.T;
                LimitSchemeTrajectory lim = limit_solve(seed, lp, *field);
                r.per_step = (v == VariableSet::XE)
                                 ? xe_error_series(ap, lim)
                                 : gc_error_series_limit(ap, lim, eps, *field);
            } else {
                LimitRefTrajectory lim = reference_solve_limit(
                    seed, cfg.T, n_out, *field, RefSolverConfig{});
                r.per_step = (v == VariableSet::XE)
                                 ? xe_error_series(ap, lim)
                                 : gc_error_series_limit(ap, lim, eps, *field);
            }
            r.l1_error = mean_of(r.per_step);
            r.max_fp_residual = ap.max_fp_residual;
        } catch (const StepBudgetExceeded&) {
            r.status = "skipped:step-budget";
        } catch (const SimError& e) {
            r.status = std::string("failed:") + err_token(e.kind());
        }
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace detail

// Runs one sweep mode over the (eps, dt) grid.  Cells are independent tasks;
// results land in a pre-sized slot per cell, so row order — ascending (eps,
// dt), then the config's variable order — is identical for any worker count.
inline SweepTable run_sweep(const SweepConfig& cfg, Comparison mode) {
    validate_config(cfg);
    SweepTable table;
    table.mode = mode;
    if (std::find(cfg.comparisons.begin(), cfg.comparisons.end(), mode) ==
        cfg.comparisons.end())
        return table;

    const std::vector<double> eps_grid = detail::sorted_unique(cfg.eps_grid);
    const std::vector<double> dt_grid = detail::sorted_unique(cfg.dt_grid);
    struct Cell {
        double eps, dt;
    };
    std::vector<Cell> cells;
    for (double e : eps_grid)
        for (double d : dt_grid) cells.push_back({e, d});

    std::vector<std::vector<SweepRow>> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            results[i] = detail::compute_cell(cfg, mode, cells[i].eps, cells[i].dt);
        }
    };
    const std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.parallel_workers),
        cells.empty() ? 1 : cells.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    for (std::vector<SweepRow>& rs : results)
        for (SweepRow& r : rs) table.rows.push_back(std::move(r));
    return table;
}

inline SweepTable run_convergence_sweep(const SweepConfig& cfg) {
    return run_sweep(cfg, Comparison::Convergence);
}

inline SweepTable run_asymptotic_sweep(const SweepConfig& cfg, Comparison mode) {
    if (mode == Comparison::Convergence)
        throw ConfigError("run_asymptotic_sweep: mode must be discrete or continuous");
    return run_sweep(cfg, mode);
}

} // namespace gyroap
