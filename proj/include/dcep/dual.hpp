#pragma once

#include <array>
#include <cmath>

namespace dcep {

/// Forward-mode scalar carrying partial derivatives with respect to N seeds.
/// Used to differentiate the plant equations exactly; the same templated
/// physics code runs on plain doubles for value-only evaluation.
template <int N>
struct FDual {
    double v = 0.0;
    std::array<double, N> g{};

    FDual() = default;
    FDual(double value) : v(value) {}  // NOLINT: implicit constants are the point

    static FDual seed(double value, int index) {
        FDual d(value);
        d.g[index] = 1.0;
        return d;
    }
};

template <int N>
FDual<N> operator+(const FDual<N>& a, const FDual<N>& b) {
    FDual<N> r(a.v + b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.g[i] + b.g[i];
    return r;
}
template <int N>
FDual<N> operator+(const FDual<N>& a, double b) {
    FDual<N> r = a;
    r.v += b;
    return r;
}
template <int N>
FDual<N> operator+(double a, const FDual<N>& b) {
    return b + a;
}

template <int N>
FDual<N> operator-(const FDual<N>& a) {
    FDual<N> r(-a.v);
    for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
    return r;
}
template <int N>
FDual<N> operator-(const FDual<N>& a, const FDual<N>& b) {
    FDual<N> r(a.v - b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.g[i] - b.g[i];
    return r;
}
template <int N>
FDual<N> operator-(const FDual<N>& a, double b) {
    FDual<N> r = a;
    r.v -= b;
    return r;
}
template <int N>
FDual<N> operator-(double a, const FDual<N>& b) {
    return -(b - a);
}

template <int N>
FDual<N> operator*(const FDual<N>& a, const FDual<N>& b) {
    FDual<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    return r;
}
template <int N>
FDual<N> operator*(const FDual<N>& a, double b) {
    FDual<N> r(a.v * b);
    for (int i = 0; i < N; ++i) r.g[i] = a.g[i] * b;
    return r;
}
template <int N>
FDual<N> operator*(double a, const FDual<N>& b) {
    return b * a;
}

template <int N>
FDual<N> operator/(const FDual<N>& a, const FDual<N>& b) {
    FDual<N> r(a.v / b.v);
    double inv2 = 1.0 / (b.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = (a.g[i] * b.v - a.v * b.g[i]) * inv2;
    return r;
}
template <int N>
FDual<N> operator/(const FDual<N>& a, double b) {
    return a * (1.0 / b);
}
template <int N>
FDual<N> operator/(double a, const FDual<N>& b) {
    FDual<N> r(a / b.v);
    double s = -a / (b.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = s * b.g[i];
    return r;
}

template <int N>
FDual<N> sqrt(const FDual<N>& a) {
    FDual<N> r(std::sqrt(a.v));
    double s = 0.5 / r.v;
    for (int i = 0; i < N; ++i) r.g[i] = s * a.g[i];
    return r;
}

template <int N>
FDual<N> log(const FDual<N>& a) {
    FDual<N> r(std::log(a.v));
    double s = 1.0 / a.v;
    for (int i = 0; i < N; ++i) r.g[i] = s * a.g[i];
    return r;
}

template <int N>
FDual<N> exp(const FDual<N>& a) {
    FDual<N> r(std::exp(a.v));
    for (int i = 0; i < N; ++i) r.g[i] = r.v * a.g[i];
    return r;
}

/// a^p for constant exponent; a must stay positive on solver paths.
template <int N>
FDual<N> pow(const FDual<N>& a, double p) {
    FDual<N> r(std::pow(a.v, p));
    double s = p * std::pow(a.v, p - 1.0);
    for (int i = 0; i < N; ++i) r.g[i] = s * a.g[i];
    return r;
}

template <int N>
double value(const FDual<N>& a) {
    return a.v;
}
inline double value(double a) { return a; }

}  // namespace dcep
