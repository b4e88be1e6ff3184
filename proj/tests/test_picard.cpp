#include "doctest.h"

#include "halfline/picard.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

using namespace halfline;

namespace {

// symmetric exponential coupling with the quadratic Laurent correction, the
// shape produced by the second-order-pencil reduction with sigma = e^{-bx}
SystemSpec expdecay_spec(double beta) {
    CoeffMatrix A(2), C1(2);
    A(0, 1) = CoefficientFunction::exp_decay(1.0, beta);
    A(1, 0) = CoefficientFunction::exp_decay(1.0, beta);
    C1(0, 0) = CoefficientFunction::exp_decay(-0.5, 2.0 * beta);
    C1(0, 1) = CoefficientFunction::exp_decay(-0.5, 2.0 * beta);
    C1(1, 0) = CoefficientFunction::exp_decay(0.5, 2.0 * beta);
    C1(1, 1) = CoefficientFunction::exp_decay(0.5, 2.0 * beta);
    return make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, A, {C1},
                       WeightFunction::constant(1.0));
}

std::shared_ptr<const NodeTables> tables_at(const SystemSpec& spec, double alpha,
                                            double lambda_abs, const Tolerances& tol) {
    PropagatorMatrix M(spec, alpha, tol);
    double c_phase = phase_rate(spec.b, Complex(-1.0, 0.0));
    return make_node_tables(spec, M, dp_cap_for(lambda_abs, c_phase, tol), tol);
}

BCVector unit_vector(int n, std::size_t nodes, int comp) {
    BCVector w(n, nodes);
    w.set_constant(comp, Complex(1.0, 0.0));
    return w;
}

} // namespace

TEST_SUITE("picard") {

TEST_CASE("zero operator converges immediately") {
    SystemSpec spec =
        make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, CoeffMatrix(2), {},
                    WeightFunction::constant(1.0));
    Tolerances tol;
    auto tab = tables_at(spec, 0.0, 1.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), Complex(1.0, 0.0));

    ContractionInfo info = contraction_bound(ctx, spec);
    CHECK(info.bound_v == 0.0);
    CHECK(info.bound_v2 == 0.0);
    CHECK(info.theta == 0.0);
    CHECK(info.n_bound == doctest::Approx(1.0));
    CHECK(info.ok);

    BCVector w = unit_vector(2, tab->grid.node_count(), 1);
    FixedPointResult res = solve_fixed_point(ctx, spec, w, tol);
    CHECK(res.cert.iterations == 1);
    CHECK(res.cert.converged);
    CHECK(res.z.max_abs_diff(w) == 0.0);
    CHECK(res.cert.norm_vw == 0.0);
}

TEST_CASE("nilpotent coupling: exact closed-form fixed point") {
    // only a_12 = e^{-x}: V^2 = 0, so z = w + V w exactly
    CoeffMatrix A(2);
    A(0, 1) = CoefficientFunction::exp_decay(1.0, 1.0);
    SystemSpec spec = make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, A, {},
                                  WeightFunction::constant(1.0));
    Tolerances tol;
    auto tab = tables_at(spec, 0.0, 1.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), Complex(1.0, 0.0));

    BCVector w = unit_vector(2, tab->grid.node_count(), 1);
    FixedPointResult res = solve_fixed_point(ctx, spec, w, tol);
    CHECK(res.cert.iterations <= 3);
    for (int i = 0; i < tab->grid.count(); i += 11) {
        double x = tab->grid.panels()[static_cast<std::size_t>(i)].x[4];
        std::size_t node = PanelGrid::node_index(i, 4);
        CHECK(std::abs(res.z.at(0, node) + std::exp(-x) / 3.0) < 1e-9);
        CHECK(std::abs(res.z.at(1, node) - 1.0) < 1e-12);
    }
    CHECK(res.cert.two_step_ratio <= res.cert.bound.bound_v2 + 0.05);
    // weak estimate from the series representation
    CHECK(res.z.max_abs_diff(w) <= res.cert.bound.n_bound * res.cert.norm_vw + 1e-12);
}

TEST_CASE("contraction certificate on the exponential scenario") {
    SystemSpec spec = expdecay_spec(1.0);
    Tolerances tol;
    Complex lam = std::polar(10.0, pi() / 4.0);
    auto tab = tables_at(spec, 0.0, 10.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), lam);

    ContractionInfo info = contraction_bound(ctx, spec);
    CHECK(info.ok);
    CHECK(info.bound_v2 < 0.5);
    CHECK(info.bound_v2 > 0.0);
    CHECK(info.theta > 0.0);
    CHECK(info.kappa > 0.0);
    CHECK(info.gamma == doctest::Approx(0.025).epsilon(1e-6)); // (1/2)(1/2)/10
    // the closed-form constants bound the same quantities from far above
    CHECK(info.bound_v_coarse >= info.bound_v);
    CHECK(info.bound_v2_coarse >= info.bound_v2);

    // bound decays along the ray
    auto bound_at = [&](double r) {
        auto t = tables_at(spec, 0.0, r, tol);
        KernelContext c(t, 1, Complex(-1.0, 0.0), std::polar(r, pi() / 4.0));
        return contraction_bound(c, spec).bound_v2;
    };
    double b1 = bound_at(1.0), b10 = bound_at(10.0), b100 = bound_at(100.0);
    CHECK(b10 < b1);
    CHECK(b100 < b10);
}

TEST_CASE("fixed point matches a direct solve of the discretized system") {
    // faster decay keeps the dense collocation matrix tractable
    SystemSpec spec = expdecay_spec(2.0);
    Tolerances tol;
    tol.phase_cap = pi() / 2.0; // coarser panels, still well inside stability
    Complex lam = std::polar(10.0, pi() / 4.0);
    auto tab = tables_at(spec, 0.0, 10.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), lam, tol);

    const std::size_t nodes = tab->grid.node_count();
    const int n = 2;
    BCVector w = unit_vector(n, nodes, 1);
    FixedPointResult res = solve_fixed_point(ctx, spec, w, tol);
    CHECK(res.cert.converged);
    CHECK(res.cert.two_step_ratio <= res.cert.bound.bound_v2 + 0.05);

    // assemble I - V column by column through the same discretized action
    const std::size_t dim = static_cast<std::size_t>(n) * nodes;
    Eigen::MatrixXcd Amat = Eigen::MatrixXcd::Identity(
        static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    BCVector basis(n, nodes), col;
    for (std::size_t c = 0; c < dim; ++c) {
        basis.fill_zero();
        basis.at(static_cast<int>(c / nodes), c % nodes) = Complex(1.0, 0.0);
        ctx.apply_V(basis, col);
        for (int comp = 0; comp < n; ++comp)
            for (std::size_t i = 0; i < nodes; ++i)
                Amat(static_cast<Eigen::Index>(comp * nodes + i),
                     static_cast<Eigen::Index>(c)) -= col.at(comp, i);
    }
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < nodes; ++i)
        rhs(static_cast<Eigen::Index>(nodes + i)) = Complex(1.0, 0.0);
    Eigen::VectorXcd direct = Amat.partialPivLu().solve(rhs);

    double diff = 0.0;
    for (int comp = 0; comp < n; ++comp)
        for (std::size_t i = 0; i < nodes; ++i)
            diff = std::max(diff, std::abs(res.z.at(comp, i) -
                                           direct(static_cast<Eigen::Index>(
                                               comp * nodes + i))));
    CHECK(diff < 1e-7);
}

TEST_CASE("operator application is linear") {
    SystemSpec spec = expdecay_spec(1.0);
    Tolerances tol;
    auto tab = tables_at(spec, 0.0, 3.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), Complex(3.0, 0.0));

    std::mt19937 rng(42);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const std::size_t nodes = tab->grid.node_count();
    BCVector z1(2, nodes), z2(2, nodes), zc(2, nodes);
    Complex c(0.3, -0.7);
    for (int comp = 0; comp < 2; ++comp)
        for (std::size_t i = 0; i < nodes; ++i) {
            z1.at(comp, i) = Complex(U(rng), U(rng));
            z2.at(comp, i) = Complex(U(rng), U(rng));
            zc.at(comp, i) = z1.at(comp, i) + c * z2.at(comp, i);
        }
    BCVector o1, o2, oc;
    ctx.apply_V(z1, o1);
    ctx.apply_V(z2, o2);
    ctx.apply_V(zc, oc);
    double err = 0.0;
    for (int comp = 0; comp < 2; ++comp)
        for (std::size_t i = 0; i < nodes; ++i)
            err = std::max(err, std::abs(oc.at(comp, i) - o1.at(comp, i) -
                                         c * o2.at(comp, i)));
    CHECK(err < 1e-9);
}

TEST_CASE("uniqueness: a different starting iterate reaches the same point") {
    SystemSpec spec = expdecay_spec(1.0);
    Tolerances tol;
    auto tab = tables_at(spec, 0.0, 10.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), std::polar(10.0, pi() / 4.0));

    BCVector w = unit_vector(2, tab->grid.node_count(), 1);
    FixedPointResult res = solve_fixed_point(ctx, spec, w, tol);

    // start from 2w instead of w and iterate z <- w + V z manually
    BCVector z(2, tab->grid.node_count()), vz;
    for (std::size_t i = 0; i < z.nodes(); ++i) z.at(1, i) = Complex(2.0, 0.0);
    for (int m = 0; m < 60; ++m) {
        ctx.apply_V(z, vz);
        for (int comp = 0; comp < 2; ++comp)
            for (std::size_t i = 0; i < z.nodes(); ++i)
                z.at(comp, i) = w.at(comp, i) + vz.at(comp, i);
    }
    CHECK(res.z.max_abs_diff(z) < 1e-8);
}

TEST_CASE("threshold refusal with a radius hint") {
    // couplings scaled up tenfold: contraction fails at small lambda
    CoeffMatrix A(2);
    A(0, 1) = CoefficientFunction::exp_decay(10.0, 1.0);
    A(1, 0) = CoefficientFunction::exp_decay(10.0, 1.0);
    SystemSpec spec = make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, A, {},
                                  WeightFunction::constant(1.0));
    Tolerances tol;
    auto tab = tables_at(spec, 0.0, 1.0, tol);
    KernelContext ctx(tab, 1, Complex(-1.0, 0.0), Complex(1.0, 0.0));
    BCVector w = unit_vector(2, tab->grid.node_count(), 1);
    try {
        solve_fixed_point(ctx, spec, w, tol);
        FAIL("expected a threshold refusal");
    } catch (const ThresholdError& e) {
        CHECK(e.bound_v2 >= 0.5);
        CHECK(e.lambda_hint > 1.0);
    }
}

TEST_CASE("threshold radius estimation") {
    Tolerances tol;
    std::vector<RayJob> jobs{{pi() / 8.0, 1, Complex(-1.0, 0.0)},
                             {-pi() / 8.0, 0, Complex(1.0, 0.0)}};

    // zero operator: the bound holds everywhere, search floor returned
    SystemSpec trivial =
        make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, CoeffMatrix(2), {},
                    WeightFunction::constant(1.0));
    CHECK(estimate_lambda_alpha(trivial, 0.0, jobs, tol, 64.0) == doctest::Approx(0.5));

    SystemSpec spec = expdecay_spec(1.0);
    double lam0 = estimate_lambda_alpha(spec, 0.0, jobs, tol, 64.0);
    double lam2 = estimate_lambda_alpha(spec, 2.0, jobs, tol, 64.0);
    CHECK(lam0 > 0.5);
    CHECK(lam2 <= lam0);

    // certificate holds just above the returned radius on both rays
    PropagatorMatrix M(spec, 0.0, tol);
    for (const RayJob& job : jobs) {
        double r = lam0 * 1.05;
        auto tab = make_node_tables(
            spec, M, dp_cap_for(r, phase_rate(spec.b, job.omega), tol), tol);
        KernelContext ctx(tab, job.pivot0, job.omega, std::polar(r, job.arg), tol);
        CHECK(contraction_bound(ctx, spec).bound_v2 < 0.5);
    }
}

} // TEST_SUITE
