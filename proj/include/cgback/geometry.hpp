#pragma once

#include <array>
#include <cmath>
#include <ostream>

#include "cgback/errors.hpp"

namespace cgback {

// 3-vector over an arbitrary scalar: double for plain geometry, a dual
// number when derivatives are propagated through the same kernels.
template <class S>
struct Vec3T {
    S x{};
    S y{};
    S z{};

    Vec3T() = default;
    Vec3T(S xx, S yy, S zz) : x(std::move(xx)), y(std::move(yy)), z(std::move(zz)) {}

    Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3T operator-() const { return {-x, -y, -z}; }
    Vec3T operator*(const S& s) const { return {x * s, y * s, z * s}; }
    Vec3T operator/(const S& s) const { return {x / s, y / s, z / s}; }
    Vec3T& operator+=(const Vec3T& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3T& operator-=(const Vec3T& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
};

template <class S>
Vec3T<S> operator*(const S& s, const Vec3T<S>& v) {
    return v * s;
}

template <class S>
S dot(const Vec3T<S>& a, const Vec3T<S>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class S>
Vec3T<S> cross(const Vec3T<S>& a, const Vec3T<S>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class S>
S norm_sq(const Vec3T<S>& v) {
    return dot(v, v);
}

template <class S>
S norm(const Vec3T<S>& v) {
    using std::sqrt;
    return sqrt(norm_sq(v));
}

template <class S>
Vec3T<S> normalized(const Vec3T<S>& v) {
    return v / norm(v);
}

using Vec3 = Vec3T<double>;

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

// Relative threshold below which a cross product is treated as degenerate
// (collinear direction pair).
constexpr double kDegeneracyTol = 1e-8;

// Bond angle at vertex b, in [0, pi].
inline double bond_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 u = a - b;
    const Vec3 v = c - b;
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0)
        throw NumericError("bond_angle: coincident points");
    return std::atan2(norm(cross(u, v)), dot(u, v));
}

// Signed torsion angle of the chain a-b-c-d in (-pi, pi]: the angle
// between planes (a,b,c) and (b,c,d) measured about the b->c axis.
inline double dihedral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 b1 = b - a;
    const Vec3 b2 = c - b;
    const Vec3 b3 = d - c;
    const Vec3 n1 = cross(b1, b2);
    const Vec3 n2 = cross(b2, b3);
    const double nb2 = norm(b2);
    if (nb2 == 0.0)
        throw NumericError("dihedral: coincident central points");
    if (norm(n1) < kDegeneracyTol * norm(b1) * nb2 ||
        norm(n2) < kDegeneracyTol * nb2 * norm(b3))
        throw NumericError("dihedral: collinear points");
    const Vec3 m = cross(n1, b2 / nb2);
    const double tau = std::atan2(dot(m, n2), dot(n1, n2));
    return tau <= -M_PI ? M_PI : tau; // keep the range half-open at -pi
}

// Proper rotation matrix.
struct Rotation {
    std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    static Rotation about_axis(const Vec3& axis, double angle) {
        const Vec3 u = normalized(axis);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double t = 1.0 - c;
        Rotation r;
        r.m = {{{c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s},
                {u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s},
                {u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t}}};
        return r;
    }

    // Rotation from a unit quaternion (w, x, y, z); normalizes first.
    static Rotation from_quaternion(double w, double x, double y, double z) {
        const double n = std::sqrt(w * w + x * x + y * y + z * z);
        w /= n;
        x /= n;
        y /= n;
        z /= n;
        Rotation r;
        r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
        return r;
    }

    Vec3 apply(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
};

// Rigid motion x -> R x + t.
struct RigidMotion {
    Rotation rotation;
    Vec3 translation{};

    Vec3 apply(const Vec3& v) const { return rotation.apply(v) + translation; }
};

} // namespace cgback
