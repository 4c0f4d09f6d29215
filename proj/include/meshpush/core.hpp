// core.hpp — small vector types and the error hierarchy shared by all modules.
//
// Conventions:
// - double precision everywhere; model units are caller-defined.
// - indices are 0-based in memory (OBJ I/O converts from 1-based).
// - all types are plain values, immutable by convention after construction.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace meshpush {

struct Vec2 {
    double x{}, y{};

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product of (a,0) and (b,0); positive for a CCW turn.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

struct Vec3 {
    double x{}, y{}, z{};

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double norm(const Vec2& v) { return std::sqrt(dot(v, v)); }
inline double squared_norm(const Vec3& v) { return dot(v, v); }
inline double squared_norm(const Vec2& v) { return dot(v, v); }

inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return {v.x / n, v.y / n, v.z / n};
}

// Base for all library errors. Specific types below so callers can
// distinguish argument problems from runtime failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SubdivisionTooLarge : Error {
    using Error::Error;
};
struct ParseError : Error {
    int line;
    ParseError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct EmptyMesh : Error {
    using Error::Error;
};
struct IsolatedVertex : Error {
    using Error::Error;
};
struct NonManifoldEdge : Error {
    using Error::Error;
};
struct ZeroDirection : Error {
    using Error::Error;
};
struct DegenerateTriangle : Error {
    using Error::Error;
};
struct TooLarge : Error {
    using Error::Error;
};
struct SingularActiveSet : Error {
    using Error::Error;
};
struct OrderingViolated : Error {
    using Error::Error;
};
struct PushInfeasible : Error {
    using Error::Error;
};
struct VerificationFailed : Error {
    using Error::Error;
};
struct ZeroAreaMesh : Error {
    using Error::Error;
};
struct EmptyPointSet : Error {
    using Error::Error;
};
struct NonFiniteLoss : Error {
    using Error::Error;
};

}  // namespace meshpush
