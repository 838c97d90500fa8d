#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gyroap/diagnostics.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/rate_fit.hpp"
#include "gyroap/scheme_ap.hpp"
#include "gyroap/scheme_limit.hpp"
#include "gyroap/vec2.hpp"

namespace gyroap {

struct InvariantResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string residual_detail(double worst, double tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "max residual %.3e (tol %.1e)", worst, tol);
    return buf;
}

// Centered finite difference of a scalar field, h tuned for ~1e-10 truncation.
template <class F>
Vec2 fd_gradient(F&& f, Vec2 x, double h = 1e-5) {
    return {(f(Vec2{x.x + h, x.y}) - f(Vec2{x.x - h, x.y})) / (2.0 * h),
            (f(Vec2{x.x, x.y + h}) - f(Vec2{x.x, x.y - h})) / (2.0 * h)};
}

} // namespace detail

// Self-contained property checks behind the `check` subcommand; every check
// is deterministic (fixed seeds) and independent of the others.
inline std::vector<InvariantResult> run_invariant_checks() {
    std::vector<InvariantResult> out;
    auto run = [&](const char* name, auto&& body) {
        InvariantResult r;
        r.name = name;
        try {
            body(r);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        out.push_back(r);
    };

    run("perp-rotation-identities", [](InvariantResult& r) {
        std::mt19937_64 rng(101);
        std::uniform_real_distribution<double> U(-10.0, 10.0);
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const Vec2 a{U(rng), U(rng)};
            worst = std::max(worst, std::abs(dot(perp(a), a)));
            worst = std::max(worst, std::abs(norm(perp(a)) - norm(a)));
            worst = std::max(worst, norm(perp(perp(a)) + a));
        }
        const double tol = 1e-13;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("cayley-norm-identity", [](InvariantResult& r) {
        std::mt19937_64 rng(202);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::uniform_real_distribution<double> L(-8.0, 8.0);
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const double alpha = std::copysign(std::pow(10.0, L(rng)), U(rng));
            const Vec2 z{10.0 * U(rng), 10.0 * U(rng)};
            const Vec2 u = cayley_solve(alpha, z);
            worst = std::max(worst, std::abs(norm(u) * std::hypot(1.0, alpha) -
                                             norm(z)) /
                                        (1.0 + norm(z)));
            const Vec2 v = cayley_rotate(alpha, z);
            worst = std::max(worst,
                             std::abs(norm(v) - norm(z)) / (1.0 + norm(z)));
        }
        const double tol = 1e-13;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("cayley-resolvent-difference", [](InvariantResult& r) {
        // (I + aJ)^-1 - (I + bJ)^-1 = -(I + aJ)^-1 (a - b) J (I + bJ)^-1
        std::mt19937_64 rng(303);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::uniform_real_distribution<double> L(-4.0, 4.0);
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const double a = std::copysign(std::pow(10.0, L(rng)), U(rng));
            const double b = std::copysign(std::pow(10.0, L(rng)), U(rng));
            const Vec2 z{10.0 * U(rng), 10.0 * U(rng)};
            const Vec2 lhs = cayley_solve(a, z) - cayley_solve(b, z);
            const Vec2 rhs =
                cayley_solve(a, perp(cayley_solve(b, z)) * (-(a - b)));
            worst = std::max(worst, norm(lhs - rhs) / (1.0 + norm(z)));
        }
        const double tol = 1e-12;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("field-gradient-consistency", [](InvariantResult& r) {
        std::mt19937_64 rng(404);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        DiscField disc;
        UniformField uni(2.0, UniformField::Potential::Quadratic);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            Vec2 x{6.0 * U(rng), 6.0 * U(rng)};
            for (const FieldModel* f :
                 {static_cast<const FieldModel*>(&disc),
                  static_cast<const FieldModel*>(&uni)}) {
                const Vec2 fd_E =
                    detail::fd_gradient([&](Vec2 p) { return -f->phi(p); }, x);
                worst = std::max(worst,
                                 norm(fd_E - f->E(x)) / (1.0 + norm(f->E(x))));
                const Vec2 fd_gib = detail::fd_gradient(
                    [&](Vec2 p) { return 1.0 / f->b(p); }, x);
                worst = std::max(worst, norm(fd_gib - f->grad_inv_b(x)) /
                                            (1.0 + norm(f->grad_inv_b(x))));
            }
        }
        const double tol = 1e-6;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("l1-pseudometric", [](InvariantResult& r) {
        std::mt19937_64 rng(505);
        std::uniform_real_distribution<double> U(-5.0, 5.0);
        const std::size_t N = 12;
        auto series = [&]() {
            std::vector<Vec2> s;
            for (std::size_t i = 0; i <= N; ++i) s.push_back({U(rng), U(rng)});
            return s;
        };
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const auto a = series(), b = series(), c = series();
            const double ab = l1_error(a, b, N), ba = l1_error(b, a, N);
            const double ac = l1_error(a, c, N), bc = l1_error(b, c, N);
            worst = std::max(worst, std::abs(ab - ba));
            worst = std::max(worst, l1_error(a, a, N));
            worst = std::max(worst, ac - (ab + bc));  // <= 0 when triangle holds
        }
        const double tol = 1e-12;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("kinetic-energy-step-identity", [](InvariantResult& r) {
        // eps (|w'|^2 - |w|^2) = 2 dt E(x_bar) . w_bar at every accepted step.
        DiscField f;
        SchemeParams p;
        p.eps = 0.1;
        p.dt = 1.0 / 64.0;
        p.T = 1.0;
        const ApTrajectory traj = ap_solve({{2.0, 2.0}, 9.0, {3.0, 3.0}, 0.0}, p, f);
        double worst = 0.0;
        for (std::size_t n = 0; n < traj.steps(); ++n) {
            const AugmentedState& a = traj.states[n];
            const AugmentedState& b = traj.states[n + 1];
            const StepDiagnostics& d = traj.diags[n];
            const double lhs = p.eps * (norm2(b.w) - norm2(a.w));
            const double rhs = 2.0 * p.dt * dot(f.E(d.x_bar), d.w_bar);
            const double scale =
                1.0 + p.eps * (norm2(b.w) + norm2(a.w)) +
                2.0 * p.dt * norm(f.E(d.x_bar)) * norm(d.w_bar);
            worst = std::max(worst, std::abs(lhs - rhs) / scale);
        }
        const double tol = 10.0 * p.fp_tol;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("discrete-energy-invariant", [](InvariantResult& r) {
        DiscField f;
        SchemeParams p;
        p.eps = 0.05;
        p.dt = 1.0 / 256.0;
        p.T = 1.0;
        const ApTrajectory traj = ap_solve({{2.0, 2.0}, 9.0, {3.0, 3.0}, 0.0}, p, f);
        const double H0 = traj.front().e + f.phi(traj.front().x);
        double worst = 0.0;
        for (const AugmentedState& s : traj.states)
            worst = std::max(worst, std::abs(s.e + f.phi(s.x) - H0));
        const double tol = 1e-10;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("limit-scheme-g-invariant", [](InvariantResult& r) {
        DiscField f;
        LimitSchemeParams p;
        p.dt = 1.0 / 64.0;
        p.T = 1.0;
        const LimitSchemeTrajectory traj = limit_solve({{2.0, 2.0}, 9.0, 0.0}, p, f);
        const double G0 = traj.front().g + f.phi(traj.front().y);
        double worst = 0.0;
        for (const LimitState& s : traj.states)
            worst = std::max(worst, std::abs(s.g + f.phi(s.y) - G0));
        const double tol = 1e-12;
        r.pass = worst <= tol;
        r.detail = detail::residual_detail(worst, tol);
    });

    run("regime-classification", [](InvariantResult& r) {
        bool ok = classify_regime(0.1, 1e-4) == Regime::StiffResolved;
        ok = ok && classify_regime(0.1, 0.01) == Regime::ApPlateau;
        ok = ok && classify_regime(0.01, 0.5) == Regime::Coarse;
        // Boundaries are inclusive toward the better-resolved side.
        ok = ok && classify_regime(0.5, 0.125) == Regime::StiffResolved;
        ok = ok && classify_regime(0.25, 0.5) == Regime::ApPlateau;
        r.pass = ok;
        r.detail = ok ? "all pinned cases classified as expected"
                      : "pinned case misclassified";
    });

    return out;
}

inline std::string invariant_report_text(const std::vector<InvariantResult>& rs) {
    std::string out;
    std::size_t failed = 0;
    for (const InvariantResult& r : rs) {
        out += r.pass ? "[PASS] " : "[FAIL] ";
        out += r.name;
        out += ": ";
        out += r.detail;
        out += '\n';
        if (!r.pass) ++failed;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "summary: %zu checks, %zu failed\n",
                  rs.size(), failed);
    out += buf;
    return out;
}

inline std::size_t count_invariant_failures(const std::vector<InvariantResult>& rs) {
    std::size_t n = 0;
    for (const InvariantResult& r : rs)
        if (!r.pass) ++n;
    return n;
}

} // namespace gyroap
