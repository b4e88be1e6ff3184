#pragma once

#include <complex>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace halfline {

using Complex = std::complex<double>;

inline constexpr double pi() { return 3.14159265358979323846264338327950288; }
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Error taxonomy.  Construction/validation problems use std exceptions
// (std::invalid_argument, std::domain_error, std::out_of_range); the classes
// below mark failures that carry numerical meaning.
// ---------------------------------------------------------------------------

/// Coefficient evaluated to a non-finite value, or an unsupported operation
/// was requested on a coefficient family.
class CoefficientError : public std::runtime_error {
public:
    explicit CoefficientError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Adaptive ODE integration could not reach the requested tolerance
/// (step-size underflow or node budget exhausted).
class IntegrationError : public std::runtime_error {
public:
    explicit IntegrationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The spectral parameter violates the Re(lambda*b_j) ordering required by
/// the kernel/operator definitions.
class OrderingError : public std::runtime_error {
public:
    explicit OrderingError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Contraction certificate failed: the squared-operator bound is >= 1/2 at
/// the requested lambda.  Carries a crude radius hint on the same ray.
class ThresholdError : public std::runtime_error {
public:
    ThresholdError(const std::string& msg, double bound, double radius_hint)
        : std::runtime_error(msg), bound_v2(bound), lambda_hint(radius_hint) {}
    double bound_v2;
    double lambda_hint;
};

/// Fixed-point iteration hit the iteration cap without meeting tolerance.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A supposedly fundamental system came out with a near-zero determinant.
class DegeneracyError : public std::runtime_error {
public:
    explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scenario configuration is malformed (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Tolerances.  Defaults follow the project-wide conventions; the CLI can
// override individual keys.
// ---------------------------------------------------------------------------
struct Tolerances {
    double quad = 1e-10;        ///< absolute quadrature tolerance
    double ode = 1e-10;         ///< adaptive ODE local tolerance
    double tail = 1e-9;         ///< coefficient tail mass beyond the working interval
    double fixed_point = 1e-10; ///< Picard successive-difference stop
    int iteration_cap = 200;
    double phase_cap = pi() / 4.0; ///< max oscillation phase per quadrature panel
    double dp_max = 0.5;           ///< max panel length in p-units regardless of lambda
    double ordering_slack = 1e-12; ///< tolerated boundary violation of orderings
};

// ---------------------------------------------------------------------------
// Angular interval in the lambda plane.  Intervals are open (lo, hi) with
// hi - lo <= 2*pi; membership of the closure treats boundary rays as
// belonging to both adjacent closures.  full() marks the punctured plane.
// ---------------------------------------------------------------------------
struct AngularInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool full_plane = false;

    static AngularInterval full() { return {0.0, 2.0 * pi(), true}; }

    double width() const { return full_plane ? 2.0 * pi() : hi - lo; }

    /// Does the closure contain arg(lambda)?  (lambda != 0)
    bool contains_closure(Complex lambda, double tol = 1e-12) const {
        if (full_plane) return lambda != Complex(0.0, 0.0);
        double a = std::arg(lambda);
        // reduce a into [lo - 2pi, lo) + offsets and test
        double two_pi = 2.0 * pi();
        double t = a;
        while (t > hi + tol) t -= two_pi;
        while (t < lo - tol) t += two_pi;
        return t >= lo - tol && t <= hi + tol;
    }

    bool contains_open(Complex lambda, double tol = 1e-12) const {
        if (full_plane) return lambda != Complex(0.0, 0.0);
        double two_pi = 2.0 * pi();
        double t = std::arg(lambda);
        while (t > hi) t -= two_pi;
        while (t < lo) t += two_pi;
        return t > lo + tol && t < hi - tol;
    }

    double midpoint() const { return 0.5 * (lo + hi); }
};

inline bool approx_equal(Complex a, Complex b, double tol = 1e-12) {
    return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b));
}

} // namespace halfline
