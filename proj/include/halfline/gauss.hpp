#pragma once

#include <array>
#include <cstddef>

namespace halfline {

// 7-point Gauss-Legendre rule on [-1,1] plus the node-value -> partial
// integral machinery used by the panel quadrature.  A degree-6 Legendre
// interpolant through the nodes is integrated exactly, which gives partial
// integrals \int_{-1}^{u_g} f at every node u_g from the node values alone.
struct Gauss7 {
    static constexpr int N = 7;
    std::array<double, N> node{};   // ascending
    std::array<double, N> weight{};
    // partial[g][q]: coefficient of f(u_q) in \int_{-1}^{u_g} f(u) du
    std::array<std::array<double, N>, N> partial{};
    // proj[k][q]: value -> Legendre coefficient, c_k = sum_q proj[k][q] f(u_q)
    std::array<std::array<double, N>, N> proj{};

    /// Weights of \int_{-1}^{u} f for arbitrary u in [-1,1].
    void partial_to(double u, double out[N]) const;
    /// Interpolation weights of the degree-6 interpolant at arbitrary u.
    void interp_to(double u, double out[N]) const;

    static const Gauss7& instance();
};

namespace detail {
double legendre_p(int k, double u);
}

} // namespace halfline
