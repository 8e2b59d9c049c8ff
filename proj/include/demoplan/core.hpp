#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace demoplan {

/// Base class for all pipeline errors. Each module defines named
/// subclasses so callers can catch specific failure conditions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }

    Vec2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
    }
    // +90 degree rotation (counter-clockwise).
    Vec2 rot90() const { return {-y, x}; }
    Vec2 rotated(double angle) const {
        const double c = std::cos(angle), s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }

    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
    bool is_unit(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Empirical quantile with linear interpolation between order statistics.
/// q in [0,1]; the input need not be sorted.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile: empty sample");
    std::sort(values.begin(), values.end());
    if (q <= 0.0) return values.front();
    if (q >= 1.0) return values.back();
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

/// Deterministic per-purpose RNG stream: mixes a base seed with a salt so
/// independent generators never share a sequence.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return std::mt19937_64(z ^ (z >> 31));
}

inline bool approx_eq(double a, double b, double tol = 1e-9) {
    return std::abs(a - b) <= tol;
}

}  // namespace demoplan
