#include "halfline/propagator.hpp"

#include "halfline/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace halfline {

namespace {

// int_alpha^inf max(sign * Re f, 0), quadrature over the support plus an
// L1 tail bound added on top (keeps the result an upper bound).
double signed_part_integral(const CoefficientFunction& f, double alpha, double sign) {
    if (f.is_zero()) return 0.0;
    double T = std::max(alpha + 1.0, f.support_bound(1e-13));
    auto q = integrate_adaptive(
        [&](double x) { return std::max(sign * f(x).real(), 0.0); }, alpha, T,
        f.breakpoints(), 1e-12);
    return q.value + q.error + f.tail_norms(T).l1;
}

} // namespace

double nonneg_exp_max_entry(const Eigen::MatrixXd& N) {
    const int n = static_cast<int>(N.rows());
    double scale = N.maxCoeff();
    int s = 0;
    while (scale > 0.5) {
        scale *= 0.5;
        ++s;
    }
    Eigen::MatrixXd B = N / std::pow(2.0, s);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 24; ++k) {
        term = (term * B) / static_cast<double>(k);
        sum += term;
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum.maxCoeff();
}

PropagatorMatrix::PropagatorMatrix(const SystemSpec& spec, double alpha,
                                   const Tolerances& tol)
    : n_(spec.n), alpha_(alpha) {
    if (alpha < 0.0) throw std::invalid_argument("propagator: alpha < 0");
    gronwall_ = std::exp(spec.a_const());
    diagonal_ = spec.all_b_distinct();
    cut_ = spec.t_cut(tol.tail, alpha);
    if (diagonal_)
        build_diagonal(spec, tol);
    else
        build_block(spec, tol);
}

void PropagatorMatrix::build_diagonal(const SystemSpec& spec, const Tolerances&) {
    diag_.reserve(static_cast<std::size_t>(n_));
    double bound = 1.0;
    for (int j = 0; j < n_; ++j) {
        const CoefficientFunction& f = spec.A(j, j);
        diag_.push_back(f);
        double pos = signed_part_integral(f, alpha_, +1.0);
        double neg = signed_part_integral(f, alpha_, -1.0);
        bound = std::max({bound, std::exp(pos), std::exp(neg)});
    }
    entry_bound_ = std::min(bound, gronwall_);
}

void PropagatorMatrix::build_block(const SystemSpec& spec, const Tolerances& tol) {
    CoeffMatrix D = build_D(spec);
    const int n = n_;
    const int nn = n * n;

    auto rhs = [&](double x, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        Eigen::MatrixXcd Dx(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) Dx(j, k) = D(j, k).is_zero() ? Complex(0) : D(j, k)(x);
        Eigen::Map<const Eigen::MatrixXcd> M(y.data(), n, n);
        Eigen::Map<const Eigen::MatrixXcd> W(y.data() + nn, n, n); // W = M^{-1}
        Eigen::MatrixXcd dM = Dx * M;
        Eigen::MatrixXcd dW = -(W * Dx);
        dy.resize(2 * nn);
        Eigen::Map<Eigen::MatrixXcd>(dy.data(), n, n) = dM;
        Eigen::Map<Eigen::MatrixXcd>(dy.data() + nn, n, n) = dW;
    };

    Eigen::VectorXcd y0 = Eigen::VectorXcd::Zero(2 * nn);
    for (int j = 0; j < n; ++j) {
        y0[j * n + j] = Complex(1.0, 0.0);
        y0[nn + j * n + j] = Complex(1.0, 0.0);
    }

    std::vector<double> stops;
    for (double b : spec.breakpoints())
        if (b > alpha_ && b < cut_) stops.push_back(b);

    // hmax keeps the cubic Hermite dense error near h^4/384 ~ 1e-9
    dense_ = integrate_dense(rhs, std::move(y0), alpha_, cut_, tol.ode, stops, 0.025);

    // Cross-check the joint integration: M * M^{-1} must stay near identity.
    double worst = 0.0;
    for (double x : {alpha_, 0.5 * (alpha_ + cut_), cut_}) {
        Eigen::MatrixXcd P = eval(x) * eval_inv(x);
        worst = std::max(worst, (P - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff());
    }
    if (worst > 1e-7)
        throw IntegrationError("propagator: inverse drift " + std::to_string(worst));

    // Entrywise Peano bound exp(N) with N_jk = ||d_jk||_L1[alpha,inf); the
    // same N bounds M^{-1} (transposed series), so one max-entry suffices.
    Eigen::MatrixXd N(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) N(j, k) = D(j, k).tail_norms(alpha_).l1;
    entry_bound_ = std::min(nonneg_exp_max_entry(N), gronwall_);
}

Eigen::MatrixXcd PropagatorMatrix::eval(double x) const {
    if (x < alpha_ - 1e-12) throw std::out_of_range("propagator eval below alpha");
    Eigen::MatrixXcd M(n_, n_);
    if (diagonal_) {
        M.setZero();
        for (int j = 0; j < n_; ++j)
            M(j, j) = std::exp(diag_[static_cast<std::size_t>(j)].integrate(alpha_, x));
        return M;
    }
    double xe = std::clamp(x, alpha_, cut_);
    Eigen::VectorXcd y = dense_.eval(xe);
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) M(j, k) = y[k * n_ + j];
    return M;
}

Eigen::MatrixXcd PropagatorMatrix::eval_inv(double x) const {
    if (x < alpha_ - 1e-12) throw std::out_of_range("propagator eval below alpha");
    Eigen::MatrixXcd W(n_, n_);
    if (diagonal_) {
        W.setZero();
        for (int j = 0; j < n_; ++j)
            W(j, j) = std::exp(-diag_[static_cast<std::size_t>(j)].integrate(alpha_, x));
        return W;
    }
    double xe = std::clamp(x, alpha_, cut_);
    Eigen::VectorXcd y = dense_.eval(xe);
    const int nn = n_ * n_;
    for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) W(j, k) = y[nn + k * n_ + j];
    return W;
}

} // namespace halfline
