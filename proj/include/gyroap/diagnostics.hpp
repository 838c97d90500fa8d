#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gyroap/errors.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/states.hpp"

namespace gyroap {

// First-order guiding center variables of an augmented state:
//   x_gc = x - eps perp(w)/b(x)
//   e_gc = e + (eps/b(x)) perp(E(x)) . w
// At eps = 0 both reduce to the identity.  Averaging out the leading
// gyration makes these observables converge one order faster in eps.
inline GuidingCenterState guiding_center(Vec2 x, double e, Vec2 w, double eps,
                                         const FieldModel& model) {
    const double bx = model.b(x);
    GuidingCenterState gc;
    gc.x_gc = x - (eps / bx) * perp(w);
    gc.e_gc = e + (eps / bx) * dot(perp(model.E(x)), w);
    return gc;
}

inline GuidingCenterState guiding_center(const AugmentedState& s, double eps,
                                         const FieldModel& model) {
    GuidingCenterState gc = guiding_center(s.x, s.e, s.w, eps, model);
    gc.t = s.t;
    return gc;
}

// Recovers the velocity from the energy/direction split: v = sqrt(2e) w/|w|.
// e = 0 is a valid rest state; negative energy and a direction vector too
// small to normalize are reported as errors.
inline Vec2 reconstruct_velocity(double e, Vec2 w) {
    if (e < 0.0) throw NegativeEnergy("reconstruct_velocity: e = " + std::to_string(e));
    const double nw = norm(w);
    if (nw < 1e-290)
        throw ZeroDirection("reconstruct_velocity: |w| below underflow guard");
    if (e == 0.0) return {0.0, 0.0};
    return (std::sqrt(2.0 * e) / nw) * w;
}

inline double total_energy(Vec2 x, Vec2 v, const FieldModel& model) {
    return 0.5 * norm2(v) + model.phi(x);
}

inline double norm_of(double a) { return std::abs(a); }
inline double norm_of(Vec2 a) { return norm(a); }
inline double norm_of(SlowState a) {
    return std::sqrt(a.pos.x * a.pos.x + a.pos.y * a.pos.y + a.energy * a.energy);
}

// Discrete l1 distance between two sampled series:
//   (1/N) * sum_{n=1..N} |a_n - b_n|
// The initial sample (index 0) is shared by construction and excluded.
template <class T>
double l1_error(std::span<const T> a, std::span<const T> b, std::size_t N) {
    if (a.size() < N + 1 || b.size() < N + 1)
        throw LengthMismatch("l1_error: series shorter than N + 1 = " + std::to_string(N + 1));
    if (N == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t n = 1; n <= N; ++n) acc += norm_of(a[n] - b[n]);
    return acc / static_cast<double>(N);
}

template <class T>
double l1_error(const std::vector<T>& a, const std::vector<T>& b, std::size_t N) {
    return l1_error(std::span<const T>(a), std::span<const T>(b), N);
}

// Per-step distances, same convention (indices 1..N at slots 0..N-1).
template <class T>
std::vector<double> per_step_errors(std::span<const T> a, std::span<const T> b, std::size_t N) {
    if (a.size() < N + 1 || b.size() < N + 1)
        throw LengthMismatch("per_step_errors: series shorter than N + 1");
    std::vector<double> out;
    out.reserve(N);
    for (std::size_t n = 1; n <= N; ++n) out.push_back(norm_of(a[n] - b[n]));
    return out;
}

} // namespace gyroap
