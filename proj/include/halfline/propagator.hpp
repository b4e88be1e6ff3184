#pragma once

#include "halfline/ode.hpp"
#include "halfline/system.hpp"
#include "halfline/types.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Propagator M of the diagonal-block part: M' = D(x) M, M(alpha) = I, with
// D the part of A supported where b_j == b_k.  Entries of M and M^{-1} are
// bounded uniformly on [alpha,inf); entry_bound() returns a certified bound.
//
// When all b are distinct D is diagonal and M is evaluated in closed form,
// M_jj = exp(int_alpha^x a_jj).  Otherwise M and M^{-1} are integrated as a
// joint adaptive ODE up to the working cut and frozen beyond it (the frozen
// tail carries relative error below the tail tolerance).
// ---------------------------------------------------------------------------
class PropagatorMatrix {
public:
    PropagatorMatrix(const SystemSpec& spec, double alpha, const Tolerances& tol = {});

    int size() const { return n_; }
    double alpha() const { return alpha_; }
    double cut() const { return cut_; }
    bool diagonal() const { return diagonal_; }

    Eigen::MatrixXcd eval(double x) const;
    Eigen::MatrixXcd eval_inv(double x) const;

    /// Certified sup over x >= alpha of max_jk max(|M_jk|, |M^{-1}_jk|):
    /// positive/negative-part integrals on the diagonal path, entrywise
    /// L1-norm matrix exponential on the block path.
    double entry_bound() const { return entry_bound_; }

    /// Plain Gronwall fallback e^{a} with a = n * max_jk ||a_jk||_L1[0,inf).
    double gronwall_bound() const { return gronwall_; }

private:
    void build_diagonal(const SystemSpec& spec, const Tolerances& tol);
    void build_block(const SystemSpec& spec, const Tolerances& tol);

    int n_ = 0;
    double alpha_ = 0.0;
    double cut_ = 0.0;
    bool diagonal_ = false;
    double entry_bound_ = 1.0;
    double gronwall_ = 1.0;

    std::vector<CoefficientFunction> diag_;  // a_jj when diagonal
    DenseSolution dense_;                    // columns of M then rows of M^{-1}
};

/// max-entry of exp(N) for an entrywise nonnegative matrix N, evaluated by
/// scaling and squaring with a plain Taylor core (all terms nonnegative).
double nonneg_exp_max_entry(const Eigen::MatrixXd& N);

} // namespace halfline
