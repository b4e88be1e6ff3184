#pragma once

#include "halfline/kernels.hpp"
#include "halfline/ode.hpp"
#include "halfline/picard.hpp"
#include "halfline/sectors.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Shared per-build data: the renumbered system a group of columns was solved
// in, its node tables, and its propagator.  perm[i] is the original index of
// the i-th component in the renumbered system.
// ---------------------------------------------------------------------------
struct ColumnContext {
    SystemSpec pspec;
    std::vector<int> perm;
    std::shared_ptr<const NodeTables> tables;
    std::shared_ptr<const PropagatorMatrix> M;
};

// ---------------------------------------------------------------------------
// One solution column.  z holds the bounded unknown of the defining integral
// equation z = w + V z at the grid nodes, where w is e_k scaled by
// e^{lambda(b_k - omega)(p(x) - p(alpha))} (identically e_k when omega = b_k).
// The solution column itself is y_k = M z e^{lambda omega (p - p(alpha))} in
// renumbered components.  `left` extends it to [0, alpha], also in renumbered
// components; evaluators translate back to the original ordering.
// ---------------------------------------------------------------------------
struct SolutionColumn {
    std::shared_ptr<const ColumnContext> ctx;
    int k_pos = 0;   ///< 0-based position of the unit vector in the renumbered system
    int k_orig = 0;  ///< original index of the characteristic number b_k
    int pivot0 = 0;  ///< 0-based pivot of the directed operator
    Complex b_k;     ///< characteristic number of the column
    Complex omega;   ///< conjugation weight used in the solve
    BCVector z;
    PicardCertificate cert;
    double env_sup = 0.0; ///< observed sup_x max_j |(M z)_j|
    bool has_left = false;
    DenseSolution left;
};

// ---------------------------------------------------------------------------
// A built system of solutions: n columns for a fundamental system, columns
// m..n for a large-sector system, n again for a supplemented one.  Columns
// are ordered by decreasing growth.  Evaluators return original components.
// ---------------------------------------------------------------------------
class SolutionSystem {
public:
    double alpha = 0.0;
    Complex lambda;
    int n = 0;
    std::string region;  ///< e.g. "sector 1", "large m=2 mid", "supplemented"
    int m_start = 1;     ///< 1-based first column label (m for large-sector)
    std::vector<SolutionColumn> columns;

    int cols() const { return static_cast<int>(columns.size()); }

    /// z components of column c at x = alpha, renumbered ordering.
    Eigen::VectorXcd z_at_alpha(int c) const;

    /// Solution column in original components; valid on [0, cut].
    Eigen::VectorXcd eval_column(int c, double x) const;

    /// Bounded factor of the column, y_c(x) e^{-lambda omega (p(x)-p(alpha))},
    /// in original components.  Stays O(1) where eval_column may overflow.
    Eigen::VectorXcd eval_bounded(int c, double x) const;

    /// n x cols matrix of eval_column values.
    Eigen::MatrixXcd eval_matrix(double x) const;

    /// Determinant of the column matrix at x = alpha (square systems only).
    Complex det_at_alpha() const;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Fundamental system for lambda in the closure of sector kappa: for each k,
/// solves z_k = e_k + V_k z_k with omega = b_k in the sector's decreasing
/// renumbering and forms y_k = M z_k e^{lambda b_k (p - p(alpha))}.  Columns
/// at alpha satisfy y_jk = delta_jk for j >= k.  Shared node tables may be
/// passed to reuse a previous build at the same or larger |lambda|.
SolutionSystem build_fss(const SystemSpec& spec, double alpha, int kappa, Complex lambda,
                         const Tolerances& tol = {},
                         std::shared_ptr<const ColumnContext> shared_ctx = nullptr);

/// Sub-region of the two-sector region an anchor weight belongs to.
enum class LargeSide { automatic_side, mid, gamma1, gammasigma };

/// Non-fundamental system of columns k = m..n valid on the union of two
/// neighboring sectors (roots-of-unity systems only).  Solves the directed
/// system with pivot m and the side-specific weight: b_m on the first sector,
/// b_m e^{(-1)^m i pi/n} on the mid strip, b_{m+1} (b_n when m = n) on the
/// neighboring sector.  automatic_side picks the first sub-region whose
/// closure contains lambda (mid, then gamma1, then gammasigma).
SolutionSystem build_large_sector(const SystemSpec& spec, double alpha, int m,
                                  Complex lambda, const Tolerances& tol = {},
                                  LargeSide side = LargeSide::automatic_side,
                                  std::shared_ptr<const ColumnContext> shared_ctx = nullptr);

/// First m-1 columns of the fundamental system joined with the large-sector
/// columns; checks |det at alpha| and throws DegeneracyError below 1e-10.
SolutionSystem supplement_fss(const SolutionSystem& large, const SolutionSystem& fss);

/// Integrate each column from alpha down to 0 with the full differential
/// system (bounded interval, no instability).  Called by the builders when
/// alpha > 0; public for rebuilds after tolerance changes.
void extend_to_zero(SolutionSystem& sys, const Tolerances& tol = {});

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Residual factors s_jk = y_jk e^{-lambda b_k (p - p(alpha))} - m_jk.
/// sup(j, c) is the sup over grid nodes, rows in original component order.
/// Samples are recorded every `stride` panels (first node of the panel).
struct ResidualData {
    Eigen::MatrixXd sup;
    std::vector<double> xs;
    std::vector<Eigen::MatrixXcd> samples;
};
ResidualData extract_residuals(const SolutionSystem& sys, int stride = 0);

/// Re-evaluates z - w - V z on a `refine` times finer grid (independent
/// quadrature of the same defining equation) and returns the sup discrepancy
/// over all columns.
double verify_integral_residual(const SolutionSystem& sys, int refine = 4,
                                const Tolerances& tol = {});

/// Contour test of analyticity on a closed disc: |oint f| on the circle and
/// the Cauchy-formula reconstruction defect at the center, both by the
/// 64-node trapezoid rule (exact for trigonometric polynomials), plus the
/// observed scale max|f| on the contour.
struct AnalyticityReport {
    double contour_defect = 0.0;
    double cauchy_error = 0.0;
    double scale = 0.0;
};
AnalyticityReport verify_analyticity(const std::function<Complex(Complex)>& f,
                                     Complex center, double radius, int nodes = 64);

} // namespace halfline
