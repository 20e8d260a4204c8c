#pragma once

#include <array>
#include <cmath>

namespace cgback::detail {

// Forward-mode scalar carrying derivatives against a fixed set of lanes.
// Sized for the largest per-residue parameter block (13 slots x 3).
template <int N>
struct DualT {
    double v = 0;
    std::array<double, N> g{};

    DualT() = default;
    DualT(double value) : v(value) {} // NOLINT: implicit by design, constants promote

    static DualT seeded(double value, int lane) {
        DualT d(value);
        d.g[lane] = 1.0;
        return d;
    }

    DualT operator-() const {
        DualT r(-v);
        for (int i = 0; i < N; ++i)
            r.g[i] = -g[i];
        return r;
    }
    DualT operator+(const DualT& o) const {
        DualT r(v + o.v);
        for (int i = 0; i < N; ++i)
            r.g[i] = g[i] + o.g[i];
        return r;
    }
    DualT operator-(const DualT& o) const {
        DualT r(v - o.v);
        for (int i = 0; i < N; ++i)
            r.g[i] = g[i] - o.g[i];
        return r;
    }
    DualT operator*(const DualT& o) const {
        DualT r(v * o.v);
        for (int i = 0; i < N; ++i)
            r.g[i] = g[i] * o.v + v * o.g[i];
        return r;
    }
    DualT operator/(const DualT& o) const {
        DualT r(v / o.v);
        const double inv2 = 1.0 / (o.v * o.v);
        for (int i = 0; i < N; ++i)
            r.g[i] = (g[i] * o.v - v * o.g[i]) * inv2;
        return r;
    }
    DualT& operator+=(const DualT& o) { return *this = *this + o; }
    DualT& operator-=(const DualT& o) { return *this = *this - o; }
};

template <int N>
DualT<N> sqrt(const DualT<N>& x) {
    DualT<N> r(std::sqrt(x.v));
    const double f = 0.5 / r.v;
    for (int i = 0; i < N; ++i)
        r.g[i] = x.g[i] * f;
    return r;
}

template <int N>
DualT<N> sin(const DualT<N>& x) {
    DualT<N> r(std::sin(x.v));
    const double c = std::cos(x.v);
    for (int i = 0; i < N; ++i)
        r.g[i] = x.g[i] * c;
    return r;
}

template <int N>
DualT<N> cos(const DualT<N>& x) {
    DualT<N> r(std::cos(x.v));
    const double s = -std::sin(x.v);
    for (int i = 0; i < N; ++i)
        r.g[i] = x.g[i] * s;
    return r;
}

} // namespace cgback::detail
