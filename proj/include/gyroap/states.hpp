#pragma once

#include <cmath>
#include <vector>

#include "gyroap/vec2.hpp"

namespace gyroap {

// Full kinetic state (x, v) of the stiff characteristic system.
struct PhaseState {
    Vec2 x;
    Vec2 v;
    double t = 0.0;
};

// State (y, g) of the drift limit system: guiding position and total energy
// carried along the drift flow.
struct LimitState {
    Vec2 y;
    double g = 0.0;
    double t = 0.0;
};

// State of the augmented formulation advanced by the AP scheme: position x,
// energy variable e, and velocity-like variable w.  At initialization
// e = |v|^2/2 and w = v; for eps > 0 the pair (e, w) carries the same
// information as v split into magnitude and direction.
struct AugmentedState {
    Vec2 x;
    double e = 0.0;
    Vec2 w;
    double t = 0.0;
};

// Slow observables (position-like pair, energy-like scalar) compared between
// solvers.  Error norms treat it as one point in R^3.
struct SlowState {
    Vec2 pos;
    double energy = 0.0;
};

inline SlowState operator-(SlowState a, SlowState b) {
    return {a.pos - b.pos, a.energy - b.energy};
}

struct GuidingCenterState {
    Vec2 x_gc;
    double e_gc = 0.0;
    double t = 0.0;
};

// Per-step record of the implicit solve inside the AP scheme.
struct StepDiagnostics {
    int fp_iterations = 0;     // outer fixed-point sweeps
    double fp_residual = 0.0;  // normalized residual of the raw scheme equations
    Vec2 x_bar;                // midpoint position used in the converged step
    double e_bar = 0.0;        // midpoint energy
    Vec2 w_bar;                // midpoint velocity variable
};

template <class State>
struct Trajectory {
    std::vector<State> states;

    std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
    const State& front() const { return states.front(); }
    const State& back() const { return states.back(); }
};

struct StiffTrajectory : Trajectory<PhaseState> {
    double max_energy_drift = 0.0;  // relative, over all emitted samples
    long long internal_steps = 0;
};

struct LimitRefTrajectory : Trajectory<LimitState> {
    long long internal_steps = 0;
};

struct ApTrajectory : Trajectory<AugmentedState> {
    std::vector<StepDiagnostics> diags;  // one entry per step
    double max_fp_residual = 0.0;
    int max_fp_iterations = 0;
};

struct LimitSchemeTrajectory : Trajectory<LimitState> {
    double max_fp_residual = 0.0;
    int max_fp_iterations = 0;
};

} // namespace gyroap
