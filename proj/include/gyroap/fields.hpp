#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "gyroap/errors.hpp"
#include "gyroap/vec2.hpp"

namespace gyroap {

struct BoundingBox {
    Vec2 lo;
    Vec2 hi;
};

// Static field data for the transverse dynamics: scalar magnetic intensity
// b(x) >= b_floor > 0 and electrostatic potential phi(x) with E = -grad phi.
// Implementations provide analytic derivatives; finite differences are used
// only as a cross-check in the test suite.  Evaluations outside the guarded
// domain throw DomainEscape.  Instances are immutable and safe to share
// across threads.
class FieldModel {
public:
    virtual ~FieldModel() = default;

    virtual std::string name() const = 0;
    virtual bool in_domain(Vec2 x) const = 0;
    virtual BoundingBox bounds() const = 0;
    virtual double b_floor() const = 0;

    double b(Vec2 x) const { guard(x); return b_raw(x); }
    double phi(Vec2 x) const { guard(x); return phi_raw(x); }
    Vec2 E(Vec2 x) const { guard(x); return E_raw(x); }
    Vec2 grad_inv_b(Vec2 x) const { guard(x); return grad_inv_b_raw(x); }

    // E x B drift velocity -perp(E)/b of the limit dynamics.
    Vec2 exb_drift(Vec2 x) const {
        guard(x);
        return (-1.0 / b_raw(x)) * perp(E_raw(x));
    }

    // Upper estimate of b over the guarded region, sampled on a 64x64 grid
    // of the bounding box.  Used only to pick safe reference step sizes.
    double b_ceiling_estimate() const {
        if (ceiling_ < 0.0) {
            const BoundingBox bb = bounds();
            const int n = 64;
            double best = b_floor();
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    Vec2 p{bb.lo.x + (bb.hi.x - bb.lo.x) * (i + 0.5) / n,
                           bb.lo.y + (bb.hi.y - bb.lo.y) * (j + 0.5) / n};
                    if (in_domain(p)) best = std::max(best, b_raw(p));
                }
            }
            ceiling_ = best;
        }
        return ceiling_;
    }

protected:
    virtual double b_raw(Vec2 x) const = 0;
    virtual double phi_raw(Vec2 x) const = 0;
    virtual Vec2 E_raw(Vec2 x) const = 0;
    virtual Vec2 grad_inv_b_raw(Vec2 x) const = 0;

    void guard(Vec2 x) const {
        if (!in_domain(x))
            throw DomainEscape("field evaluation at (" + std::to_string(x.x) + ", " +
                               std::to_string(x.y) + ") outside guarded domain of " + name());
    }

private:
    mutable double ceiling_ = -1.0;
};

// Disc-confined field with b(x) = 10/sqrt(100 - |x|^2) and phi = |x|^2/2.
// b grows without bound toward the rim, so the guard keeps |x|^2 below
// 100*(1 - margin).  Potential and field are smooth on the guarded disc:
//   E = -x,   1/b = sqrt(100 - |x|^2)/10,   grad(1/b) = -x/(10 sqrt(100 - |x|^2)).
class DiscField final : public FieldModel {
public:
    explicit DiscField(double margin = 1e-6) : margin_(margin) {}

    std::string name() const override { return "disc"; }
    bool in_domain(Vec2 x) const override { return norm2(x) < 100.0 * (1.0 - margin_); }
    BoundingBox bounds() const override { return {{-10.0, -10.0}, {10.0, 10.0}}; }
    double b_floor() const override { return 1.0; }

protected:
    double b_raw(Vec2 x) const override { return 10.0 / std::sqrt(100.0 - norm2(x)); }
    double phi_raw(Vec2 x) const override { return 0.5 * norm2(x); }
    Vec2 E_raw(Vec2 x) const override { return -x; }
    Vec2 grad_inv_b_raw(Vec2 x) const override {
        return (-1.0 / (10.0 * std::sqrt(100.0 - norm2(x)))) * x;
    }

private:
    double margin_;
};

// Constant magnetic intensity b0 with either a flat or a quadratic potential.
// grad(1/b) vanishes, so the ghost transport term of the augmented system
// drops out and the velocity update is a pure Cayley rotation.
class UniformField final : public FieldModel {
public:
    enum class Potential { Zero, Quadratic };

    explicit UniformField(double b0 = 1.0, Potential pot = Potential::Zero)
        : b0_(b0), pot_(pot) {
        if (!(b0 > 0.0)) throw ConfigError("uniform field requires b0 > 0");
    }

    std::string name() const override { return "uniform"; }
    bool in_domain(Vec2) const override { return true; }
    BoundingBox bounds() const override { return {{-10.0, -10.0}, {10.0, 10.0}}; }
    double b_floor() const override { return b0_; }
    Potential potential() const { return pot_; }

protected:
    double b_raw(Vec2) const override { return b0_; }
    double phi_raw(Vec2 x) const override {
        return pot_ == Potential::Quadratic ? 0.5 * norm2(x) : 0.0;
    }
    Vec2 E_raw(Vec2 x) const override {
        return pot_ == Potential::Quadratic ? -x : Vec2{0.0, 0.0};
    }
    Vec2 grad_inv_b_raw(Vec2) const override { return {0.0, 0.0}; }

private:
    double b0_;
    Potential pot_;
};

} // namespace gyroap
