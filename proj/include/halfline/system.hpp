#pragma once

#include "halfline/coefficient.hpp"
#include "halfline/types.hpp"

#include <vector>

namespace halfline {

/// Dense matrix of coefficient functions, 0-based indexing.
class CoeffMatrix {
public:
    CoeffMatrix() = default;
    explicit CoeffMatrix(int n) : n_(n), m_(static_cast<std::size_t>(n) * n) {}

    int size() const { return n_; }
    CoefficientFunction& operator()(int j, int k) { return m_[idx(j, k)]; }
    const CoefficientFunction& operator()(int j, int k) const { return m_[idx(j, k)]; }
    bool is_zero() const {
        for (const CoefficientFunction& f : m_)
            if (!f.is_zero()) return false;
        return true;
    }

private:
    std::size_t idx(int j, int k) const {
        if (j < 0 || k < 0 || j >= n_ || k >= n_) throw std::out_of_range("CoeffMatrix index");
        return static_cast<std::size_t>(j) * n_ + k;
    }
    int n_ = 0;
    std::vector<CoefficientFunction> m_;
};

// ---------------------------------------------------------------------------
// First-order system y' = (lambda rho(x) B + A(x) + C(x,lambda)) y on
// [0,inf), with B = diag(b), summable A entries, and C given as a finite
// Laurent sum C(x,lambda) = sum_eta C[eta-1](x) lambda^{-eta}.
// ---------------------------------------------------------------------------
struct SystemSpec {
    int n = 0;
    std::vector<Complex> b;
    CoeffMatrix A;
    std::vector<CoeffMatrix> C;
    WeightFunction rho;
    bool roots_of_unity = false;

    /// a = n * max_jk ||a_jk||_{L1[0,inf)}; the propagator entry bound is e^a.
    double a_const() const;

    /// max-entry L1 norm of A - D over [alpha,inf).
    double norm_A_minus_D(double alpha) const;

    /// Working cut T with every A-D and C entry tail below tail_eps.
    double t_cut(double tail_eps, double alpha) const;

    /// All coefficient breakpoints (A, C, rho), sorted unique.
    std::vector<double> breakpoints() const;

    bool all_b_distinct() const;
};

SystemSpec make_system(int n, std::vector<Complex> b, CoeffMatrix A,
                       std::vector<CoeffMatrix> C, WeightFunction rho);

/// Characteristic numbers fixed as the n-th roots of unity in the order
/// b_1 = 1, b_2 = e^{-2 pi i/n}, b_3 = e^{2 pi i/n}, b_4 = e^{-4 pi i/n}, ...
/// (odd slots walk the upper arc, even slots the lower arc).
std::vector<Complex> roots_of_unity_ordered(int n);
bool detect_roots_of_unity(const std::vector<Complex>& b);

/// D keeps a_jk exactly where b_j == b_k (exact complex comparison).
CoeffMatrix build_D(const SystemSpec& spec);

struct GammaKPhi {
    double gamma = 0.0; ///< gamma_alpha(lambda), max-entry L1 tail of C(.,lambda)
    double K = 0.0;     ///< sum over eta of max-entry L1 tails of C_eta
    double phi = 0.0;   ///< cut radius max(1/alpha, K^{1/(2N)}); +inf at alpha = 0
};

/// gamma/K/phi bundle for the Laurent tail machinery.  For C == 0 phi
/// reduces to 1/alpha.  phi is informational: the contraction certificates
/// bound gamma directly through gamma_majorant instead of cutting at phi.
GammaKPhi gamma_K_phi(const SystemSpec& spec, double alpha, Complex lambda);

/// Decreasing-in-r majorant: max_jk sum_eta ||C_eta,jk||_{L1[alpha,inf)} r^{-eta}.
/// Bounds gamma_alpha(lambda) for every |lambda| >= r.
double gamma_majorant(const SystemSpec& spec, double alpha, double r);

/// Row/column renumbering: perm[i] = original index of new index i.
SystemSpec permuted_spec(const SystemSpec& spec, const std::vector<int>& perm);

} // namespace halfline
