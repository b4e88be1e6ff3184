#pragma once

#include "halfline/solutions.hpp"
#include "halfline/system.hpp"

#include <Eigen/Dense>

#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Second-order pencil -u'' + q u + z p0 u = z^2 u on the half-line, where the
// potential q = sigma' is the distributional derivative of a summable sigma.
// The data are sigma and p0, both required to have finite L1 and L2 tail
// norms.  q itself never appears: every computation uses the regularized
// form built on the quasi-derivative u^[1] = u' - sigma u,
//   -(u^[1])' - sigma u^[1] - sigma^2 u + z p0 u = z^2 u.
// ---------------------------------------------------------------------------
struct PencilSpec {
    CoefficientFunction sigma;
    CoefficientFunction p0;
};

/// Equivalent 2x2 first-order system for y = Theta^{-1} (u, u^[1]/lambda)^T
/// with lambda = z i and Theta = [[1,1],[1,-1]]:
///   y' = lambda diag(1,-1) y
///        + [[-i p0/2,        sigma - i p0/2],
///           [sigma + i p0/2,  i p0/2       ]] y
///        + lambda^{-1} (sigma^2/2) [[-1,-1],[1,1]] y.
/// The Laurent block is omitted when sigma == 0.  Throws std::invalid_argument
/// on non-finite tail norms and CoefficientError when sigma^2 leaves the
/// coefficient families (mixed exponential and polynomial parts).
SystemSpec reduce_pencil(const PencilSpec& p);

// ---------------------------------------------------------------------------
// Pair of pencil solutions u_1, u_2 with quasi-derivatives, obtained from the
// fundamental system of the reduced 2x2 system.  Column k in {1, 2} admits
// the representation
//   u_k(x)    =        e^{mu_k (x-alpha)} (phase_k(x) + stilde_1k(x)),
//   u_k^[1](x) = mu_k  e^{mu_k (x-alpha)} (phase_k(x) + stilde_2k(x)),
// with mu_k = (-1)^{k+1} z_solve i and
// phase_k(x) = exp((-1)^k (i/2) int_alpha^x p0_solve).
//
// For Im z <= 0 the solve is direct: z_solve = z, p0_solve = p0.  For
// Im z > 0 the substitution z -> -z combined with p0 -> -p0 leaves the pencil
// invariant, so the object solves (sigma, -p0) at -z and the evaluators still
// return genuine solutions of the original pencil at the requested z
// (conjugated() reports that the column roles are the mirrored ones).
// ---------------------------------------------------------------------------
class PencilSystem {
public:
    double alpha = 0.0;
    Complex z;               ///< requested spectral parameter
    Complex z_solve;         ///< z, or -z when the upper half-plane reduction ran
    Complex lambda;          ///< z_solve * i, parameter of the reduced system
    PencilSpec pencil;       ///< original data
    PencilSpec solved;       ///< data actually reduced (p0 negated when conjugated)
    SolutionSystem sys;      ///< fundamental system of the reduced 2x2 system

    bool conjugated() const { return conjugated_; }

    /// Exponent rate of column k: mu_k = (-1)^{k+1} z_solve i.
    Complex mu(int k) const;

    /// Leading phase factor exp((-1)^k (i/2) int_alpha^x p0_solve); the
    /// integral is signed, so x < alpha is valid.
    Complex phase(int k, double x) const;

    /// Solution value u_k(x) and quasi-derivative u_k^[1](x) = u_k' - sigma u_k.
    Complex u(int k, double x) const;
    Complex u1(int k, double x) const;

    /// Representation residual stilde_jk(x): j = 1 measures u_k, j = 2
    /// measures u_k^[1].  Computed from the bounded factor, so it stays
    /// accurate where e^{mu_k (x-alpha)} would overflow.
    Complex residual(int j, int k, double x) const;

    /// sup over the collocation nodes of |stilde_jk|; entry (j-1, k-1).
    Eigen::Matrix2d residual_sup() const;

    /// det [(u_k, u_k^[1])] at x = alpha.  The construction makes the matrix
    /// of z-values unit triangular, so the value is -2 z_solve i exactly.
    Complex det_at_alpha() const;

    friend PencilSystem pencil_fss(const PencilSpec& p, double alpha, Complex z,
                                   const Tolerances& tol);

private:
    bool conjugated_ = false;
};

/// Builds the two pencil solutions for z with |z| above the contraction
/// threshold of the reduced system (ThresholdError propagates otherwise).
/// z = 0 is rejected; both half-planes are accepted per the z -> -z reduction.
PencilSystem pencil_fss(const PencilSpec& p, double alpha, Complex z,
                        const Tolerances& tol = {});

/// max over xs of |FD(u_k)' - sigma u_k - u_k^[1]| with a five-point central
/// difference whose stencil never straddles a coefficient breakpoint (the
/// step shrinks near one; points closer than 1e-10 to a breakpoint are
/// skipped).  h = 0 picks min(1e-4, 5e-3/max(1,|z|)).
double quasi_derivative_defect(const PencilSystem& ps, int k,
                               const std::vector<double>& xs, double h = 0.0);

/// sup over xs of |-(u_k^[1])' - sigma u_k^[1] - sigma^2 u_k + z p0 u_k
/// - z^2 u_k| with a five-point difference for (u^[1])', one-sided when a
/// coefficient knot lies inside the centered stencil.
double regularized_residual(const PencilSystem& ps, int k,
                            const std::vector<double>& xs, double h = 0.0);

} // namespace halfline
