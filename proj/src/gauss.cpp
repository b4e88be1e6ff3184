#include "halfline/gauss.hpp"

namespace halfline {

namespace detail {

double legendre_p(int k, double u) {
    if (k == 0) return 1.0;
    if (k == 1) return u;
    double pm1 = 1.0, p = u;
    for (int j = 2; j <= k; ++j) {
        double pn = ((2.0 * j - 1.0) * u * p - (j - 1.0) * pm1) / j;
        pm1 = p;
        p = pn;
    }
    return p;
}

} // namespace detail

namespace {

Gauss7 build_tables() {
    Gauss7 g;
    // Standard abscissae/weights, 18 significant digits.
    const double x1 = 0.949107912342758525;
    const double x2 = 0.741531185599394440;
    const double x3 = 0.405845151377397167;
    const double w1 = 0.129484966168869693;
    const double w2 = 0.279705391489276668;
    const double w3 = 0.381830050505118945;
    const double w4 = 0.417959183673469388;
    g.node = {-x1, -x2, -x3, 0.0, x3, x2, x1};
    g.weight = {w1, w2, w3, w4, w3, w2, w1};

    // Legendre coefficients of the interpolant: c_k = (2k+1)/2 sum_q w_q P_k(u_q) f_q.
    // Partial integrals: int_{-1}^{u} P_0 = u+1, int_{-1}^{u} P_k = (P_{k+1}(u)-P_{k-1}(u))/(2k+1).
    double A[7][7];
    for (int k = 0; k < 7; ++k)
        for (int q = 0; q < 7; ++q)
            A[k][q] = 0.5 * (2.0 * k + 1.0) * g.weight[q] * detail::legendre_p(k, g.node[q]);

    double S[7][7];
    for (int gi = 0; gi < 7; ++gi) {
        double u = g.node[gi];
        S[gi][0] = u + 1.0;
        for (int k = 1; k < 7; ++k)
            S[gi][k] = (detail::legendre_p(k + 1, u) - detail::legendre_p(k - 1, u)) / (2.0 * k + 1.0);
    }

    for (int gi = 0; gi < 7; ++gi)
        for (int q = 0; q < 7; ++q) {
            double acc = 0.0;
            for (int k = 0; k < 7; ++k) acc += S[gi][k] * A[k][q];
            g.partial[gi][q] = acc;
        }
    for (int k = 0; k < 7; ++k)
        for (int q = 0; q < 7; ++q) g.proj[k][q] = A[k][q];
    return g;
}

} // namespace

const Gauss7& Gauss7::instance() {
    static const Gauss7 tables = build_tables();
    return tables;
}

void Gauss7::partial_to(double u, double out[N]) const {
    double S[N];
    S[0] = u + 1.0;
    for (int k = 1; k < N; ++k)
        S[k] = (detail::legendre_p(k + 1, u) - detail::legendre_p(k - 1, u)) / (2.0 * k + 1.0);
    for (int q = 0; q < N; ++q) {
        double acc = 0.0;
        for (int k = 0; k < N; ++k) acc += S[k] * proj[k][q];
        out[q] = acc;
    }
}

void Gauss7::interp_to(double u, double out[N]) const {
    double P[N];
    for (int k = 0; k < N; ++k) P[k] = detail::legendre_p(k, u);
    for (int q = 0; q < N; ++q) {
        double acc = 0.0;
        for (int k = 0; k < N; ++k) acc += P[k] * proj[k][q];
        out[q] = acc;
    }
}

} // namespace halfline
