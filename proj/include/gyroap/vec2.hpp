#pragma once

#include <cmath>

namespace gyroap {

// Plane vector used for positions and velocities in the transverse plane.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
inline Vec2& operator+=(Vec2& a, Vec2 b) { a = a + b; return a; }
inline Vec2& operator-=(Vec2& a, Vec2 b) { a = a - b; return a; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// 90-degree counterclockwise rotation J: (x, y) -> (-y, x).
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

// Solves (I + alpha J) u = z in closed form.  Since J^2 = -I,
//   (I + alpha J)^{-1} = (I - alpha J) / (1 + alpha^2),
// so the solve costs four multiplies and shrinks norms by sqrt(1 + alpha^2).
// Stable for every real alpha, including alpha of order dt/eps^2.
inline Vec2 cayley_solve(double alpha, Vec2 z) {
    return {(z.x + alpha * z.y) / (1.0 + alpha * alpha),
            (z.y - alpha * z.x) / (1.0 + alpha * alpha)};
}

// Applies the Cayley transform (I + alpha J)^{-1} (I - alpha J), a rotation
// by angle -2*atan(alpha).  Exactly norm-preserving in exact arithmetic.
inline Vec2 cayley_rotate(double alpha, Vec2 z) {
    return cayley_solve(alpha, {z.x + alpha * z.y, z.y - alpha * z.x});
}

} // namespace gyroap
