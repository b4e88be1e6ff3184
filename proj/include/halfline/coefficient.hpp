#pragma once

#include "halfline/types.hpp"

#include <vector>

namespace halfline {

/// scale * exp(-beta x) on [0,inf); beta > 0 so the term is summable.
struct ExpTerm {
    Complex scale;
    double beta;
};

/// Polynomial sum coef[i]*(x-lo)^i supported on [lo,hi); zero elsewhere.
struct PolyPiece {
    double lo;
    double hi;
    std::vector<Complex> coef;
};

struct TailNorms {
    double l1 = 0.0;
    double l2 = 0.0;
    double l1_error = 0.0; ///< reported bound; 0 when the value is closed-form
    double l2_error = 0.0;
};

// ---------------------------------------------------------------------------
// Summable coefficient on the half-line.  Three admissible families:
// exponential decay, compactly supported piecewise polynomials, and tabulated
// values with linear interpolation (stored as degree-1 pieces).  Finite sums
// of terms arise from scaling/addition/squaring and are kept exactly.
// ---------------------------------------------------------------------------
class CoefficientFunction {
public:
    CoefficientFunction() = default;

    static CoefficientFunction zero() { return CoefficientFunction(); }
    static CoefficientFunction exp_decay(Complex scale, double beta);
    static CoefficientFunction piecewise_poly(std::vector<PolyPiece> pieces);
    /// Knots strictly increasing, knots.front() >= 0; zero outside [first,last].
    static CoefficientFunction tabulated(const std::vector<double>& knots,
                                         const std::vector<Complex>& values);

    Complex operator()(double x) const;
    bool is_zero() const { return exps_.empty() && pieces_.empty(); }

    /// Breakpoints where smoothness may fail (piece boundaries), sorted.
    const std::vector<double>& breakpoints() const { return breaks_; }

    /// Exact integral over [a,b]; b may be +infinity.
    Complex integrate(double a, double b) const;

    /// L1/L2 norms over [alpha,infinity).  L2 is exact; L1 is exact for a
    /// single exponential term or pure zero, otherwise adaptive quadrature
    /// with the reported error bound.
    TailNorms tail_norms(double alpha, double tol = 1e-12) const;

    /// T such that the L1 tail beyond T is <= eps (triangle-inequality bound).
    double support_bound(double eps) const;

    CoefficientFunction scaled(Complex c) const;
    /// Pointwise square f(x)^2 (complex square, not modulus).  Exact within
    /// the families; throws CoefficientError when exponential and polynomial
    /// parts would mix.
    CoefficientFunction squared() const;

    friend CoefficientFunction operator+(const CoefficientFunction& a,
                                         const CoefficientFunction& b);

    const std::vector<ExpTerm>& exp_terms() const { return exps_; }
    const std::vector<PolyPiece>& pieces() const { return pieces_; }

    /// True when every stored parameter has zero imaginary part.
    bool is_real() const;

private:
    void normalize();

    std::vector<ExpTerm> exps_;
    std::vector<PolyPiece> pieces_; // sorted by lo, non-overlapping
    std::vector<double> breaks_;
};

// ---------------------------------------------------------------------------
// Weight rho(x) = c_inf + d(x) with d from the coefficient families, real,
// and rho > 0 on sampled points.  rho is locally summable but need not be
// globally summable (c_inf > 0); the phase p(x) = int_0^x rho is exact.
// ---------------------------------------------------------------------------
class WeightFunction {
public:
    WeightFunction() : c_inf_(1.0) {} // default weight: rho == 1

    static WeightFunction constant(double c);
    WeightFunction(double c_inf, CoefficientFunction decay);

    double operator()(double x) const;
    double phase(double x) const;
    /// Inverse of the phase; throws std::out_of_range above the asymptotic
    /// range when the total mass is finite.
    double phase_inverse(double y) const;

    /// Sampled essential-infimum estimate over [a,b] (b may be +infinity).
    double essinf(double a, double b) const;

    double constant_part() const { return c_inf_; }
    bool finite_mass() const { return c_inf_ == 0.0; }
    double total_mass() const; ///< +infinity when c_inf > 0
    const CoefficientFunction& decay() const { return decay_; }
    std::vector<double> breakpoints() const { return decay_.breakpoints(); }

private:
    double c_inf_ = 0.0;
    CoefficientFunction decay_;
};

} // namespace halfline
