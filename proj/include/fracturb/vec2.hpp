#pragma once

#include <cmath>

namespace fracturb {

struct Vec2 {
    double a = 0.0;
    double b = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) noexcept {
        a += o.a;
        b += o.b;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 l, const Vec2& r) noexcept { return l += r; }
    friend constexpr Vec2 operator-(const Vec2& l, const Vec2& r) noexcept { return {l.a - r.a, l.b - r.b}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) noexcept { return {s * v.a, s * v.b}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    constexpr double dot(const Vec2& o) const noexcept { return a * o.a + b * o.b; }
    constexpr double norm2() const noexcept { return a * a + b * b; }
    double norm() const noexcept { return std::sqrt(norm2()); }
};

/// Wraps each component into [0, 1).
inline Vec2 wrap_unit(Vec2 x) noexcept {
    auto wrap = [](double v) {
        double w = v - std::floor(v);
        return w >= 1.0 ? 0.0 : w;  // v slightly below an integer can round up to 1
    };
    return {wrap(x.a), wrap(x.b)};
}

}  // namespace fracturb
