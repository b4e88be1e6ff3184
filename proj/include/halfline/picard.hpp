#pragma once

#include "halfline/kernels.hpp"

#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Contraction certificate for the squared operator.  The decision quantities
// bound_v / bound_v2 come from computed kernel norms:
//   bound_v  = max_j sum_l ||v_jl||_1          >= ||V||
//   bound_v2 = sum_{l,m} ||v_lm||_1 (kappa_sup + theta)  >= ||V^2||
// (the exponential factors in the kernels have modulus <= 1 on their
// domains, so the entry L1 norms majorize the operator action).  The coarse
// fields are the closed-form constants n e^{2a}(gamma + a) and
// n^2 e^{2a} K (e^{2a} gamma + theta); they bound the same quantities but
// are far weaker, so they are reported, never used for decisions.
// ---------------------------------------------------------------------------
struct ContractionInfo {
    double bound_v = 0.0;
    double bound_v2 = 0.0;
    double bound_v_coarse = 0.0;
    double bound_v2_coarse = 0.0;
    double theta = 0.0;      // sup estimator for |nu_jl|
    double theta_grid = 0.0; // pre-refinement grid sup
    double theta_tail = 0.0;
    double kappa = 0.0;      // sup bound for |kappa_jl|
    double gamma = 0.0;      // max-entry L1 of C(., lambda) on [alpha, inf)
    double n_bound = kInf;   // geometric-series solution constant
    bool ok = false;         // bound_v2 < 1/2
};

ContractionInfo contraction_bound(const KernelContext& ctx, const SystemSpec& spec,
                                  int theta_samples = 64);

struct PicardCertificate {
    Complex lambda;
    int pivot0 = 0;
    Complex omega;
    int iterations = 0;
    double final_increment = kInf; // sup-norm of the last update
    double two_step_ratio = 0.0;   // max observed ||d_{m+2}|| / ||d_m||
    double norm_w = 0.0;
    double norm_z = 0.0;
    double norm_vw = 0.0;    // ||V w||, first increment
    double tail_error = 0.0; // truncation bound n ||v tail|| ||z||
    ContractionInfo bound;
    bool converged = false;
};

struct FixedPointResult {
    BCVector z;
    PicardCertificate cert;
};

/// Successive approximations for z = w + V z on the grid of ctx.  Refuses to
/// iterate when bound_v2 >= 1/2 (ThresholdError with a radius hint); hitting
/// the iteration cap raises DivergenceError.
FixedPointResult solve_fixed_point(const KernelContext& ctx, const SystemSpec& spec,
                                   const BCVector& w, const Tolerances& tol = {});

/// One ray of the threshold search: direction arg(lambda) plus the pivot and
/// weight the contraction certificate is evaluated for.
struct RayJob {
    double arg = 0.0;
    int pivot0 = 0;
    Complex omega;
};

/// Smallest radius r such that bound_v2 < 1/2 on every job at all sampled
/// radii >= r (geometric scan refined by bisection, max over jobs).  Node
/// tables are shared across jobs per radius level.  Returns the search floor
/// when the bound holds everywhere; throws ThresholdError when even r_max
/// fails.
double estimate_lambda_alpha(const SystemSpec& spec, double alpha,
                             const std::vector<RayJob>& jobs,
                             const Tolerances& tol = {}, double r_max = 1024.0,
                             double r_floor = 0.5);

} // namespace halfline
