#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gyroap/errors.hpp"

namespace gyroap {

// Resolution regimes of the AP scheme relative to the stiffness parameter.
// Boundaries are inclusive toward the better-resolved side.
enum class Regime { StiffResolved, ApPlateau, Coarse };

inline const char* regime_token(Regime r) {
    switch (r) {
        case Regime::StiffResolved: return "stiff-resolved";
        case Regime::ApPlateau:     return "ap-plateau";
        case Regime::Coarse:        return "coarse";
    }
    return "unknown";
}

// dt <= eps^3: the step resolves the gyration and the scheme tracks the
// stiff trajectory.  eps^3 < dt <= sqrt(eps): accuracy saturates at the
// distance to the drift limit.  dt > sqrt(eps): only the limit dynamics are
// captured.
inline Regime classify_regime(double eps, double dt) {
    if (dt <= eps * eps * eps) return Regime::StiffResolved;
    if (dt <= std::sqrt(eps)) return Regime::ApPlateau;
    return Regime::Coarse;
}

struct RatePoint {
    double param = 0.0;  // abscissa (dt or eps)
    double error = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;  // log10 of the prefactor
    double r2 = 0.0;
    std::size_t n_used = 0;
    std::size_t window_begin = 0;  // half-open index range into the point list
    std::size_t window_end = 0;
    std::string axis;  // which parameter the abscissa was ("dt" or "eps")
};

// Least-squares slope of log10(error) against log10(param).  Points with
// nonpositive or nonfinite coordinates are dropped; at least three usable
// points spanning more than one abscissa are required.
inline RateFit fit_rate(std::span<const RatePoint> pts) {
    std::vector<double> lx, ly;
    for (const RatePoint& p : pts) {
        if (!(p.param > 0.0) || !(p.error > 0.0)) continue;
        if (!std::isfinite(p.param) || !std::isfinite(p.error)) continue;
        lx.push_back(std::log10(p.param));
        ly.push_back(std::log10(p.error));
    }
    const std::size_t n = lx.size();
    if (n < 3)
        throw DegenerateFit("fit_rate: only " + std::to_string(n) +
                            " usable points, need at least 3");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0))
        throw DegenerateFit("fit_rate: zero variance in the abscissa");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_used = n;
    fit.window_end = pts.size();
    const double ss_res = syy - sxy * sxy / sxx;
    // A constant series fits exactly with slope 0; report r2 = 1 for any
    // exact fit rather than 0/0.
    if (syy <= 1e-30)
        fit.r2 = 1.0;
    else
        fit.r2 = 1.0 - ss_res / syy;
    return fit;
}

inline RateFit fit_rate(const std::vector<RatePoint>& pts) {
    return fit_rate(std::span<const RatePoint>(pts));
}

// Fit restricted to the half-open index window [begin, end) of the point list.
inline RateFit fit_rate(std::span<const RatePoint> pts, std::size_t begin,
                        std::size_t end) {
    if (begin >= end || end > pts.size())
        throw DegenerateFit("fit_rate: empty or out-of-range window");
    RateFit fit = fit_rate(pts.subspan(begin, end - begin));
    fit.window_begin = begin;
    fit.window_end = end;
    return fit;
}

} // namespace gyroap
