#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcep {

/// Raised when a command makes the plant equations structurally unsatisfiable
/// (e.g. supply flow demanded while every chiller is off), as opposed to a
/// merely tight constraint the projection can trade off.
class StructuralInfeasibility : public std::runtime_error {
public:
    explicit StructuralInfeasibility(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a rule loop or solver hits an internal defect cap.
class DefectError : public std::logic_error {
public:
    explicit DefectError(const std::string& what) : std::logic_error(what) {}
};

inline constexpr double kCelsiusToKelvin = 273.15;

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " is not finite");
}

template <class T>
T clamp(T v, T lo, T hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

/// Smooth approximation of max(x, 0): 0.5*(x + sqrt(x^2 + eps^2)).
/// Error vs. the exact hinge is at most eps/2, attained at x = 0.
template <class T>
T smooth_relu(const T& x, double eps) {
    using std::sqrt;
    return 0.5 * (x + sqrt(x * x + eps * eps));
}

/// Smooth approximation of min(a, b).
template <class T>
T smooth_min(const T& a, const T& b, double eps) {
    using std::sqrt;
    return 0.5 * (a + b - sqrt((a - b) * (a - b) + eps * eps));
}

}  // namespace dcep
