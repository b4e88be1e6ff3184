#pragma once

#include "halfline/panelgrid.hpp"
#include "halfline/propagator.hpp"
#include "halfline/sectors.hpp"
#include "halfline/system.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Node tables: everything on the panel grid that does not depend on lambda.
// Matrices are conjugated by the propagator and divided by rho, so integrals
// in t become plain dP integrals of the tabulated values.  Entry norms are
// grid integrals of absolute values; *_tail are certified bounds on the mass
// beyond the working cut.
// ---------------------------------------------------------------------------
struct NodeTables {
    PanelGrid grid;
    WeightFunction rho;
    std::vector<Complex> b;
    int n = 0;

    std::vector<Complex> q;                // [node*nn + j*n + l], (M^-1(A-D)M)/rho
    std::vector<std::vector<Complex>> g;   // per eta, same layout, (M^-1 C_eta M)/rho
    std::vector<double> q_norm;            // [j*n+l], int |q_jl| dP over the grid
    std::vector<std::vector<double>> g_norm;
    double q_tail = 0.0;                   // bound on int_cut^inf |q_jl| dt, any j,l
    std::vector<double> g_tail;            // per eta
    double m_hat = 1.0;                    // propagator entry bound
    std::vector<double> c_raw_norm;        // per eta, max-entry L1 of raw C_eta on [alpha,inf)
    std::vector<Complex> m_node;           // propagator matrix at nodes, row-major n*n

    const Complex* m_at(std::size_t node) const { return m_node.data() + node * nn(); }

    std::size_t nn() const { return static_cast<std::size_t>(n) * n; }
    const Complex* q_at(std::size_t node) const { return q.data() + node * nn(); }
    const Complex* g_at(std::size_t eta, std::size_t node) const {
        return g[eta].data() + node * nn();
    }
};

/// Oscillation rate constant: panels must resolve both the kernel exponents
/// (b_j - omega) and the pair differences (b_j - b_l).
double phase_rate(const std::vector<Complex>& b, Complex omega);

/// Panel length cap in phase units for the given |lambda|.
double dp_cap_for(double lambda_abs, double c_phase, const Tolerances& tol);

std::shared_ptr<const NodeTables> make_node_tables(const SystemSpec& spec,
                                                   const PropagatorMatrix& M,
                                                   double dp_cap,
                                                   const Tolerances& tol);

// ---------------------------------------------------------------------------
// Vector of n components collocated at the grid nodes (the discretization of
// a bounded continuous vector function on [alpha, cut]).
// ---------------------------------------------------------------------------
class BCVector {
public:
    BCVector() = default;
    BCVector(int n, std::size_t nodes) : n_(n), nodes_(nodes), v_(n * nodes) {}

    int components() const { return n_; }
    std::size_t nodes() const { return nodes_; }

    Complex& at(int comp, std::size_t node) { return v_[comp * nodes_ + node]; }
    Complex at(int comp, std::size_t node) const { return v_[comp * nodes_ + node]; }
    const Complex* comp_data(int comp) const { return v_.data() + comp * nodes_; }
    Complex* comp_data(int comp) { return v_.data() + comp * nodes_; }

    double max_abs() const;
    double max_abs_diff(const BCVector& other) const;

    /// Degree-6 panel interpolation of one component at phase coordinate P
    /// (clamped to the grid range).
    Complex eval_p(const PanelGrid& grid, int comp, double P) const;

    void set_constant(int comp, Complex value);
    void fill_zero();

private:
    int n_ = 0;
    std::size_t nodes_ = 0;
    std::vector<Complex> v_;
};

struct ThetaResult {
    double value = 0.0;      // certified estimator: refined grid sup + tail
    double grid_value = 0.0; // sup over the coarse grid before refinement
    double tail = 0.0;       // additive mass beyond the cut
};

// ---------------------------------------------------------------------------
// Per-lambda kernel context for a fixed pivot k (0-based pivot0) and weight
// omega satisfying Re(lambda b_j) >= Re(lambda omega) >= Re(lambda b_l) for
// j < pivot0 <= l.  Provides the directed kernel integrals, their sup
// estimator, the operator application, and certified norm bounds.
// ---------------------------------------------------------------------------
class KernelContext {
public:
    KernelContext(std::shared_ptr<const NodeTables> tab, int pivot0, Complex omega,
                  Complex lambda, const Tolerances& tol = {});

    const NodeTables& tables() const { return *tab_; }
    const PanelGrid& grid() const { return tab_->grid; }
    Complex lambda() const { return lambda_; }
    int pivot() const { return pivot0_; }
    Complex omega() const { return omega_; }
    double ordering_slack() const { return ordering_slack_; }

    /// Directed kernel integral nu_jl(s, x) of the conjugated A-part.
    Complex eval_nu(int j, int l, double s, double x) const;
    /// Same integral against the conjugated C-part (the kappa kernel).
    Complex eval_kappa(int j, int l, double s, double x) const;

    /// sup_{j,l,s,x} |nu_jl(s,x)| estimator: panel-edge grid sweep plus local
    /// refinement, with the beyond-cut mass added on top.
    ThetaResult theta_hat(int grid_samples = 64, int refine_top = 5) const;

    /// Entry norm bounds ||v_jl||_L1 (triangle bound over the Laurent terms,
    /// tails included).
    double v_entry_norm(int j, int l) const;
    double v_row_sum() const;   // max_j sum_l ||v_jl||: operator norm bound
    double v_total_sum() const; // sum_{l,m} ||v_lm||
    double kappa_sup() const;   // max_jl ||r_jl||: sup bound for kappa
    double gamma_alpha() const; // max-entry L1 tail of C(., lambda), conjugation-free
    double v_tail() const { return v_tail_; } // any-entry mass beyond the cut

    /// out_j(x) = +-sum_l int v_jl z_l e^{lambda(b_j-omega)(p(x)-p(t))} dt at
    /// every grid node (minus and [x, cut] for j < pivot, plus and [alpha, x]
    /// otherwise).
    void apply_V(const BCVector& z, BCVector& out) const;

private:
    struct Range {
        double lo, hi;
        int sign;
    }; // directed integration range in P
    bool range_for(int j, int l, double S, double X, Range& r) const;
    Complex panel_sum(const Complex* vals_base, int j, int l, double S, double X,
                      double P_lo, double P_hi) const;
    Complex directed_integral(bool kappa_only, int j, int l, double s, double x) const;

    std::shared_ptr<const NodeTables> tab_;
    int pivot0_;
    Complex omega_;
    Complex lambda_;
    Tolerances tol_;
    double ordering_slack_ = 0.0;
    std::vector<Complex> mu_;       // lambda (b_j - omega)
    std::vector<Complex> vt_;       // combined kernel values at nodes, /rho
    std::vector<Complex> rt_;       // C-part only at nodes, /rho
    std::vector<double> v_norm_;    // per entry, tails included
    std::vector<double> r_norm_;    // per entry, tails included
    double v_tail_ = 0.0;
    double r_tail_ = 0.0;
};

// ---------------------------------------------------------------------------
// Oscillation functional of a summable scalar on the half-line:
//   Psi(lambda) = sup_{s,x >= 0} | int_{min(s,x)}^{max(s,x)} f(t)
//                                  e^{i lambda |x - t|} dt |,
// defined for Im lambda >= 0 (the exponent then has non-positive real part).
// Estimated like theta_hat: panel cumulants on [0, T] with T cutting the L1
// tail below tol.tail, a grid_samples^2 sweep over edge pairs, local
// refinement of the refine_top best cells, and the tail mass added on top.
// Always <= ||f||_L1 (asserted).  For distinct characteristic numbers the
// directed kernel integrals obey sup|nu_jl| <= Psi_jl(+-i lambda (b_j-b_l))
// with f the conjugated entry in phase coordinates.
// ---------------------------------------------------------------------------
ThetaResult psi_sup(const CoefficientFunction& f, Complex lambda,
                    int grid_samples = 64, int refine_top = 5,
                    const Tolerances& tol = {});

/// The same functional evaluated on the conjugated coupling entry (j, l) of
/// the node tables in phase coordinates, f(xi) = q_jl(x(xi)) with
/// xi = p(x) - p(alpha).  This is the exact data for the
/// sup |nu_jl| <= Psi_jl(+-i lambda (b_j - b_l)) bound whatever the weight
/// and propagator; the table's panel cap already resolves lambda_tilde for
/// every pair.  Requires Im lambda_tilde >= 0.
ThetaResult psi_entry(const NodeTables& tab, int j, int l, Complex lambda_tilde,
                      int grid_samples = 64, int refine_top = 5);

// ---------------------------------------------------------------------------
// Partial L2 integrals of a nonnegative function along a ray
// r -> origin + r * direction, r in [0, r_max]: adaptive Simpson quadrature
// of g^2 split at r_max/4 and r_max/2 so the partial sums certify the decay
// (stabilizing partials <=> the increments shrink).  Non-finite samples
// raise IntegrationError.
// ---------------------------------------------------------------------------
struct RayL2Report {
    double quarter = 0.0;     ///< int of g^2 over [0, r_max/4]
    double half = 0.0;        ///< over [0, r_max/2]
    double total = 0.0;       ///< over [0, r_max]
    double increment_ratio = 0.0; ///< (total-half) / (half-quarter), decay factor
    double tail_fraction = 0.0;   ///< (total-half) / total, share of the last half
    long evals = 0;
};
RayL2Report l2_along_ray(const std::function<double(Complex)>& g, Complex origin,
                         Complex direction, double r_max, double quad_tol = 1e-9);

} // namespace halfline
