#include "doctest.h"

#include "halfline/sturm.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace halfline;

namespace {

const Complex kI(0.0, 1.0);

PencilSpec free_pencil() { return {}; }

PencilSpec sigma_expdecay(double scale = 1.0) {
    PencilSpec p;
    p.sigma = CoefficientFunction::exp_decay(scale, 1.0);
    return p;
}

PencilSpec p0_expdecay() {
    PencilSpec p;
    p.p0 = CoefficientFunction::exp_decay(1.0, 1.0);
    return p;
}

} // namespace

TEST_SUITE("sturm") {

TEST_CASE("reduction produces the documented 2x2 system") {
    SUBCASE("sigma = e^{-x}, p0 = 0") {
        SystemSpec spec = reduce_pencil(sigma_expdecay());
        REQUIRE(spec.n == 2);
        CHECK(spec.b[0] == Complex(1.0, 0.0));
        CHECK(spec.b[1] == Complex(-1.0, 0.0));
        CHECK(spec.roots_of_unity);
        CHECK(spec.rho.constant_part() == 1.0);
        CHECK(spec.rho.decay().is_zero());
        CHECK(spec.A(0, 0).is_zero());
        CHECK(spec.A(1, 1).is_zero());
        REQUIRE(spec.C.size() == 1);
        for (double x : {0.0, 0.7, 2.1}) {
            double e1 = std::exp(-x);
            double e2 = 0.5 * std::exp(-2.0 * x);
            CHECK(std::abs(spec.A(0, 1)(x) - e1) < 1e-15);
            CHECK(std::abs(spec.A(1, 0)(x) - e1) < 1e-15);
            CHECK(std::abs(spec.C[0](0, 0)(x) + e2) < 1e-15);
            CHECK(std::abs(spec.C[0](0, 1)(x) + e2) < 1e-15);
            CHECK(std::abs(spec.C[0](1, 0)(x) - e2) < 1e-15);
            CHECK(std::abs(spec.C[0](1, 1)(x) - e2) < 1e-15);
        }
    }
    SUBCASE("p0 = e^{-x}, sigma = 0") {
        SystemSpec spec = reduce_pencil(p0_expdecay());
        CHECK(spec.C.empty());
        for (double x : {0.0, 1.3}) {
            Complex half(0.0, 0.5 * std::exp(-x));
            CHECK(std::abs(spec.A(0, 0)(x) + half) < 1e-15);
            CHECK(std::abs(spec.A(0, 1)(x) + half) < 1e-15);
            CHECK(std::abs(spec.A(1, 0)(x) - half) < 1e-15);
            CHECK(std::abs(spec.A(1, 1)(x) - half) < 1e-15);
        }
    }
    SUBCASE("free pencil reduces to the trivial system") {
        SystemSpec spec = reduce_pencil(free_pencil());
        CHECK(spec.A.is_zero());
        CHECK(spec.C.empty());
    }
    SUBCASE("both coefficients combine in the off-diagonal entries") {
        PencilSpec p;
        p.sigma = CoefficientFunction::exp_decay(1.0, 1.0);
        p.p0 = CoefficientFunction::exp_decay(2.0, 2.0);
        SystemSpec spec = reduce_pencil(p);
        double x = 0.5;
        Complex a01 = std::exp(-x) - kI * std::exp(-2.0 * x);
        Complex a10 = std::exp(-x) + kI * std::exp(-2.0 * x);
        CHECK(std::abs(spec.A(0, 1)(x) - a01) < 1e-15);
        CHECK(std::abs(spec.A(1, 0)(x) - a10) < 1e-15);
    }
    SUBCASE("mixed-family sigma cannot be squared") {
        PencilSpec p;
        p.sigma = CoefficientFunction::exp_decay(1.0, 1.0) +
                  CoefficientFunction::piecewise_poly({{0.0, 1.0, {Complex(0.3, 0.0)}}});
        CHECK_THROWS_AS(reduce_pencil(p), CoefficientError);
    }
}

TEST_CASE("free pencil: exact plane waves both ways") {
    PencilSpec p = free_pencil();
    Complex z(3.0, -2.0);
    PencilSystem ps = pencil_fss(p, 0.0, z);
    CHECK(!ps.conjugated());
    CHECK(std::abs(ps.lambda - z * kI) < 1e-15);
    CHECK(std::abs(ps.mu(1) - z * kI) < 1e-15);
    CHECK(std::abs(ps.mu(2) + z * kI) < 1e-15);

    for (double x : {0.0, 0.4, 1.1, 2.5, 5.0}) {
        Complex w1 = std::exp(z * kI * x);
        Complex w2 = std::exp(-z * kI * x);
        CHECK(std::abs(ps.u(1, x) - w1) < 1e-12 * std::abs(w1));
        CHECK(std::abs(ps.u(2, x) - w2) < 1e-12 * std::abs(w2));
        CHECK(std::abs(ps.u1(1, x) - z * kI * w1) < 1e-11 * std::abs(w1));
        CHECK(std::abs(ps.u1(2, x) + z * kI * w2) < 1e-11 * std::abs(w2));
        CHECK(std::abs(ps.phase(1, x) - 1.0) < 1e-15);
        CHECK(std::abs(ps.phase(2, x) - 1.0) < 1e-15);
    }
    CHECK(ps.residual_sup().maxCoeff() < 1e-12);
    for (int j : {1, 2})
        for (int k : {1, 2})
            for (double x : {0.7, 9.0}) // 9.0 exercises the beyond-cut path
                CHECK(std::abs(ps.residual(j, k, x)) < 1e-12);

    CHECK(std::abs(ps.det_at_alpha() + 2.0 * z * kI) < 1e-12);

    std::vector<double> xs = {0.3, 0.9, 1.7, 3.1};
    CHECK(quasi_derivative_defect(ps, 1, xs) < 1e-7);
    CHECK(quasi_derivative_defect(ps, 2, xs) < 1e-7);
    CHECK(regularized_residual(ps, 1, xs) < 1e-7);
    CHECK(regularized_residual(ps, 2, xs) < 1e-7);
}

TEST_CASE("free pencil: left extension below alpha") {
    PencilSpec p = free_pencil();
    Complex z(2.0, -1.0);
    PencilSystem ps = pencil_fss(p, 1.0, z);
    for (double x : {0.0, 0.3, 0.8}) {
        Complex w1 = std::exp(z * kI * (x - 1.0));
        CHECK(std::abs(ps.u(1, x) - w1) < 1e-8);
        CHECK(std::abs(ps.u1(1, x) - z * kI * w1) < 1e-7);
    }
}

TEST_CASE("upper half-plane handled by the z -> -z reduction") {
    SUBCASE("free pencil closed form") {
        Complex z(2.0, 1.0);
        PencilSystem ps = pencil_fss(free_pencil(), 0.0, z);
        CHECK(ps.conjugated());
        CHECK(std::abs(ps.z_solve + z) < 1e-15);
        Complex mu1 = ps.mu(1); // (-z)i
        CHECK(std::abs(mu1 + z * kI) < 1e-15);
        for (double x : {0.5, 2.0}) {
            Complex w = std::exp(mu1 * x);
            CHECK(std::abs(ps.u(1, x) - w) < 1e-12 * std::abs(w));
            CHECK(std::abs(ps.u1(1, x) - mu1 * w) < 1e-11 * std::abs(w));
        }
        // -u'' = z^2 u holds because mu^2 = -z^2
        CHECK(std::abs(mu1 * mu1 + z * z) < 1e-14 * std::abs(z * z));
        CHECK(std::abs(ps.det_at_alpha() - 2.0 * z * kI) < 1e-12);
    }
    SUBCASE("p0 pencil solves the original equation at the original z") {
        Complex z(1.0, 5.0);
        PencilSystem ps = pencil_fss(p0_expdecay(), 0.0, z);
        CHECK(ps.conjugated());
        // solved data carry the negated p0
        CHECK(std::abs(ps.solved.p0(0.4) + ps.pencil.p0(0.4)) < 1e-15);
        std::vector<double> xs = {0.2, 0.6, 1.0, 1.6};
        double bound = 1e-6 * std::max(1.0, std::norm(z));
        CHECK(regularized_residual(ps, 1, xs) < bound);
        CHECK(regularized_residual(ps, 2, xs) < bound);
        CHECK(quasi_derivative_defect(ps, 2, xs) < 1e-7);
    }
}

TEST_CASE("p0 phase factor appears in the leading term") {
    PencilSpec p = p0_expdecay();
    Complex z(0.0, -10.0); // lambda = 10 on the sector boundary ray
    PencilSystem ps = pencil_fss(p, 0.0, z);
    CHECK(std::abs(ps.lambda - 10.0) < 1e-14);

    for (double x : {0.3, 1.0, 2.0, 4.0}) {
        double half = 0.5 * (1.0 - std::exp(-x));
        Complex want1 = std::exp(-kI * half);
        Complex want2 = std::exp(kI * half);
        CHECK(std::abs(ps.phase(1, x) - want1) < 1e-14);
        CHECK(std::abs(ps.phase(2, x) - want2) < 1e-14);
        // the propagator diagonal of the reduced system carries the same phase
        Eigen::MatrixXcd M = ps.sys.columns[0].ctx->M->eval(x);
        CHECK(std::abs(M(0, 0) - want1) < 1e-12);
        CHECK(std::abs(M(1, 1) - want2) < 1e-12);
        CHECK(std::abs(M(0, 1)) == 0.0);
    }

    // with the phase the representation defect is small; without it the
    // mismatch is of the size of the phase rotation itself
    Eigen::Matrix2d sup = ps.residual_sup();
    CHECK(sup.maxCoeff() < 0.05);
    double bare = std::abs(ps.u(1, 2.0) * std::exp(-ps.mu(1) * 2.0) - 1.0);
    CHECK(bare > 0.3);
    CHECK(std::abs(ps.residual(1, 1, 2.0)) < 0.05);
}

TEST_CASE("sigma pencil sweep: residuals decay and the equation holds") {
    PencilSpec p = sigma_expdecay();
    std::vector<double> sups;
    for (double r : {10.0, 30.0, 100.0}) {
        Complex z = std::polar(r, -pi() / 4.0);
        PencilSystem ps = pencil_fss(p, 0.0, z);
        Eigen::Matrix2d sup = ps.residual_sup();
        sups.push_back(sup.maxCoeff());

        double bound = 1e-6 * std::max(1.0, std::norm(z));
        // growing column where it is still O(1), decaying column far out
        double rm = ps.mu(1).real();
        std::vector<double> xs_grow = {0.15 / rm, 0.5 / rm, 1.0 / rm, 1.5 / rm};
        std::vector<double> xs_decay = {0.5, 1.0, 2.0, 4.0};
        CHECK(regularized_residual(ps, 1, xs_grow) < bound);
        CHECK(regularized_residual(ps, 2, xs_decay) < bound);
        CHECK(quasi_derivative_defect(ps, 1, xs_grow) < 1e-7);
        CHECK(quasi_derivative_defect(ps, 2, xs_decay) < 1e-7);
        CHECK(std::abs(ps.det_at_alpha() + 2.0 * z * kI) < 1e-10 * r);
    }
    CHECK(sups[1] < sups[0]);
    CHECK(sups[2] < sups[1]);
    CHECK(sups[2] < 0.15 * sups[0]);
}

TEST_CASE("compact sigma: quasi-derivative is the continuous combination") {
    PencilSpec p;
    p.sigma = CoefficientFunction::piecewise_poly({{0.0, 2.0, {Complex(0.8, 0.0)}}});
    Complex z(10.0, -5.0);
    PencilSystem ps = pencil_fss(p, 0.0, z);

    std::vector<double> xs = {0.5, 1.0, 1.95, 2.1, 3.0};
    CHECK(quasi_derivative_defect(ps, 2, xs) < 1e-7);
    CHECK(regularized_residual(ps, 2, xs) < 1e-6 * std::norm(z));

    // u' itself jumps across the sigma knot by -0.8 u(2): measure one-sided
    // slopes of the decaying column on both sides
    double h = 1e-5;
    auto slope = [&](double a, double b) {
        return (ps.u(2, b) - ps.u(2, a)) / (b - a);
    };
    Complex left = slope(2.0 - 2.0 * h, 2.0 - h);
    Complex right = slope(2.0 + h, 2.0 + 2.0 * h);
    Complex jump_want = -0.8 * ps.u(2, 2.0);
    CHECK(std::abs((right - left) - jump_want) < 0.02 * std::abs(jump_want));
}

TEST_CASE("threshold and input errors propagate") {
    CHECK_THROWS_AS(pencil_fss(free_pencil(), 0.0, Complex(0.0, 0.0)),
                    std::invalid_argument);
    PencilSpec strong = sigma_expdecay(10.0);
    CHECK_THROWS_AS(pencil_fss(strong, 0.0, Complex(4.0, -4.0)), ThresholdError);
}

TEST_CASE("phi certificate for the generated Laurent block") {
    SystemSpec spec = reduce_pencil(sigma_expdecay());
    GammaKPhi at0 = gamma_K_phi(spec, 0.0, Complex(5.0, 0.0));
    CHECK(std::isinf(at0.phi));
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        GammaKPhi g = gamma_K_phi(spec, alpha, Complex(5.0, 0.0));
        double K_want = 0.25 * std::exp(-2.0 * alpha);
        CHECK(std::abs(g.K - K_want) < 1e-12 * K_want);
        CHECK(std::abs(g.phi - std::max(1.0 / alpha, std::sqrt(K_want))) < 1e-12);
        // certificate: the decreasing majorant at radius phi stays below sqrt(K)
        CHECK(gamma_majorant(spec, alpha, g.phi) <= std::sqrt(g.K) + 1e-15);
        for (int i = 0; i < 8; ++i) {
            Complex lam = std::polar(g.phi * (1.0 + 0.5 * i), 0.3 * i - 1.0);
            CHECK(gamma_K_phi(spec, alpha, lam).gamma <= std::sqrt(g.K) + 1e-15);
        }
    }
}

} // TEST_SUITE
