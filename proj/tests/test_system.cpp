#include "doctest.h"

#include <cmath>
#include <complex>

#include "halfline/system.hpp"

using halfline::Complex;
using halfline::CoefficientFunction;
using halfline::CoeffMatrix;
using halfline::SystemSpec;

namespace {

SystemSpec two_channel() {
    // b = (1,-1), a_12 = a_21 = e^{-x}, one 1/lambda correction with
    // entries +-e^{-2x}/2.
    CoeffMatrix A(2);
    A(0, 1) = CoefficientFunction::exp_decay(Complex(1.0, 0.0), 1.0);
    A(1, 0) = CoefficientFunction::exp_decay(Complex(1.0, 0.0), 1.0);
    CoeffMatrix C1(2);
    C1(0, 0) = CoefficientFunction::exp_decay(Complex(-0.5, 0.0), 2.0);
    C1(0, 1) = CoefficientFunction::exp_decay(Complex(-0.5, 0.0), 2.0);
    C1(1, 0) = CoefficientFunction::exp_decay(Complex(0.5, 0.0), 2.0);
    C1(1, 1) = CoefficientFunction::exp_decay(Complex(0.5, 0.0), 2.0);
    return halfline::make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)},
                                 std::move(A), {std::move(C1)},
                                 halfline::WeightFunction());
}

}  // namespace

TEST_SUITE("system") {

TEST_CASE("construction validates shapes and b") {
    CHECK_THROWS_AS(halfline::make_system(1, {Complex(1.0, 0.0)}, CoeffMatrix(1), {},
                                          halfline::WeightFunction()),
                    std::invalid_argument);
    CHECK_THROWS_AS(halfline::make_system(2, {Complex(1.0, 0.0), Complex(2.0, 0.0)},
                                          CoeffMatrix(3), {}, halfline::WeightFunction()),
                    std::invalid_argument);
}

TEST_CASE("a constant: n * max entry L1 norm") {
    auto spec = two_channel();
    // max_jk ||a_jk||_L1 = ||e^{-x}||_L1 = 1, n = 2
    CHECK(spec.a_const() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gamma, K, phi for the two-channel system") {
    auto spec = two_channel();

    // gamma_0(lambda) = max_jk ||c_jk(.,lambda)||_L1[0,inf).
    // Every entry of C_1 has |scale| = 1/2, beta = 2: L1 tail = 1/4.
    // gamma_0(lambda) = (1/4)/|lambda|.
    auto gk0 = halfline::gamma_K_phi(spec, 0.0, Complex(2.0, 0.0));
    CHECK(gk0.gamma == doctest::Approx(0.125).epsilon(1e-12));
    // K_0 = sum_eta max-entry L1 = 1/4; the cut radius blows up at alpha = 0.
    CHECK(gk0.K == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::isinf(gk0.phi));

    // alpha = 1: K_1 = e^{-2}/4, phi = max(1, sqrt(K_1)) = 1.
    auto gk1 = halfline::gamma_K_phi(spec, 1.0, Complex(2.0, 0.0));
    CHECK(gk1.K == doctest::Approx(0.25 * std::exp(-2.0)).epsilon(1e-12));
    CHECK(gk1.phi == doctest::Approx(1.0).epsilon(1e-12));

    // alpha = 4: sqrt(K_4) < 1/4, so phi = 1/alpha.
    auto gk4 = halfline::gamma_K_phi(spec, 4.0, Complex(2.0, 0.0));
    CHECK(gk4.phi == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(halfline::gamma_K_phi(spec, 0.0, Complex(0.0, 0.0)),
                    std::domain_error);
}

TEST_CASE("gamma majorant decreases in radius and dominates gamma") {
    auto spec = two_channel();
    double g4 = halfline::gamma_majorant(spec, 0.0, 4.0);
    double g8 = halfline::gamma_majorant(spec, 0.0, 8.0);
    CHECK(g4 == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(g8 < g4);
    auto gk = halfline::gamma_K_phi(spec, 0.0, Complex(0.0, 4.0));
    CHECK(g4 >= gk.gamma - 1e-15);
}

TEST_CASE("C == 0 gives phi = 1/alpha and zero gamma") {
    CoeffMatrix A(2);
    A(0, 1) = CoefficientFunction::exp_decay(Complex(1.0, 0.0), 1.0);
    auto spec = halfline::make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)},
                                      std::move(A), {}, halfline::WeightFunction());
    auto gk = halfline::gamma_K_phi(spec, 2.0, Complex(5.0, 0.0));
    CHECK(gk.gamma == 0.0);
    CHECK(gk.K == 0.0);
    CHECK(gk.phi == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("diagonal split D keeps entries only where b matches exactly") {
    // b = (1, 1, -1): the 2x2 block for indices {0,1} stays in D.
    CoeffMatrix A(3);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
            A(j, k) = CoefficientFunction::exp_decay(Complex(1.0 + j + k, 0.0), 1.0);
    auto spec = halfline::make_system(
        3, {Complex(1.0, 0.0), Complex(1.0, 0.0), Complex(-1.0, 0.0)}, std::move(A), {},
        halfline::WeightFunction());
    CHECK_FALSE(spec.all_b_distinct());

    auto D = halfline::build_D(spec);
    CHECK_FALSE(D(0, 1).is_zero());
    CHECK_FALSE(D(1, 0).is_zero());
    CHECK(D(0, 2).is_zero());
    CHECK(D(2, 1).is_zero());
    CHECK_FALSE(D(2, 2).is_zero());

    // ||A - D||: max entry L1 over the off-block entries; entry (1,2) has
    // scale 4 so the norm is 4.
    CHECK(spec.norm_A_minus_D(0.0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("roots-of-unity detection and canonical ordering") {
    auto b3 = halfline::roots_of_unity_ordered(3);
    CHECK(b3.size() == 3);
    CHECK(std::abs(b3[0] - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(b3[1] - std::polar(1.0, -2.0 * halfline::pi() / 3.0)) < 1e-15);
    CHECK(std::abs(b3[2] - std::polar(1.0, 2.0 * halfline::pi() / 3.0)) < 1e-15);

    auto b4 = halfline::roots_of_unity_ordered(4);
    CHECK(std::abs(b4[1] - Complex(0.0, -1.0)) == 0.0); // snapped exactly
    CHECK(std::abs(b4[2] - Complex(0.0, 1.0)) == 0.0);
    CHECK(std::abs(b4[3] - Complex(-1.0, 0.0)) == 0.0);

    CHECK(halfline::detect_roots_of_unity(b4));
    CHECK_FALSE(halfline::detect_roots_of_unity({Complex(1.0, 0.0), Complex(-2.0, 0.0)}));

    auto spec = two_channel();
    CHECK(spec.roots_of_unity); // (1,-1) are the 2nd roots in canonical order
}

TEST_CASE("permuted spec relabels rows and columns coherently") {
    auto spec = two_channel();
    auto sw = halfline::permuted_spec(spec, {1, 0});
    CHECK(std::abs(sw.b[0] - Complex(-1.0, 0.0)) == 0.0);
    CHECK(std::abs(sw.b[1] - Complex(1.0, 0.0)) == 0.0);
    // C1 entry (0,0) was +e^{-2x}/2 at (1,1) of the original
    CHECK(std::abs(sw.C[0](0, 0)(0.0) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(sw.A(0, 1)(0.0) - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("t_cut covers coefficient support to the tail tolerance") {
    auto spec = two_channel();
    double T = spec.t_cut(1e-9, 0.0);
    // slowest entry decays like e^{-x}: tail e^{-T} <= 1e-9 => T >= 9 ln 10
    CHECK(T >= 9.0 * std::log(10.0) - 1e-9);
    auto f = CoefficientFunction::exp_decay(Complex(1.0, 0.0), 1.0);
    CHECK(f.tail_norms(T).l1 <= 1e-9 * (1.0 + 1e-9));
}

}
