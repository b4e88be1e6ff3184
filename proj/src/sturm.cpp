#include "halfline/sturm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace halfline {

namespace {

const Complex kI(0.0, 1.0);

void require_summable(const CoefficientFunction& f, const char* name) {
    TailNorms tn = f.tail_norms(0.0);
    if (!std::isfinite(tn.l1) || !std::isfinite(tn.l2))
        throw std::invalid_argument(std::string("reduce_pencil: ") + name +
                                    " must have finite L1 and L2 norms");
}

int col_index(int k) {
    if (k < 1 || k > 2) throw std::out_of_range("pencil column index must be 1 or 2");
    return k - 1;
}

Complex signed_integral(const CoefficientFunction& f, double a, double x) {
    return x >= a ? f.integrate(a, x) : -f.integrate(x, a);
}

} // namespace

SystemSpec reduce_pencil(const PencilSpec& p) {
    require_summable(p.sigma, "sigma");
    require_summable(p.p0, "p0");

    const Complex half_i(0.0, 0.5);
    CoeffMatrix A(2);
    A(0, 0) = p.p0.scaled(-half_i);
    A(1, 1) = p.p0.scaled(half_i);
    A(0, 1) = p.sigma + p.p0.scaled(-half_i);
    A(1, 0) = p.sigma + p.p0.scaled(half_i);

    std::vector<CoeffMatrix> C;
    if (!p.sigma.is_zero()) {
        CoefficientFunction s2h = p.sigma.squared().scaled(Complex(0.5, 0.0));
        CoeffMatrix C1(2);
        C1(0, 0) = s2h.scaled(Complex(-1.0, 0.0));
        C1(0, 1) = C1(0, 0);
        C1(1, 0) = s2h;
        C1(1, 1) = s2h;
        C.push_back(std::move(C1));
    }

    return make_system(2, {Complex(1.0, 0.0), Complex(-1.0, 0.0)}, std::move(A),
                       std::move(C), WeightFunction());
}

// ---------------------------------------------------------------------------
// PencilSystem accessors
// ---------------------------------------------------------------------------

Complex PencilSystem::mu(int k) const {
    return sys.columns[static_cast<std::size_t>(col_index(k))].b_k * lambda;
}

Complex PencilSystem::phase(int k, double x) const {
    double sgn = (col_index(k) == 0) ? -1.0 : 1.0;
    Complex integral = signed_integral(solved.p0, alpha, x);
    return std::exp(Complex(0.0, 0.5 * sgn) * integral);
}

Complex PencilSystem::u(int k, double x) const {
    Eigen::VectorXcd Y = sys.eval_column(col_index(k), x);
    return Y(0) + Y(1);
}

Complex PencilSystem::u1(int k, double x) const {
    Eigen::VectorXcd Y = sys.eval_column(col_index(k), x);
    return lambda * (Y(0) - Y(1));
}

Complex PencilSystem::residual(int j, int k, double x) const {
    if (j < 1 || j > 2) throw std::out_of_range("pencil residual row must be 1 or 2");
    int c = col_index(k);
    Eigen::VectorXcd B = sys.eval_bounded(c, x);
    Complex lead = (j == 1) ? B(0) + B(1)
                            : (B(0) - B(1)) / sys.columns[static_cast<std::size_t>(c)].b_k;
    return lead - phase(k, x);
}

Eigen::Matrix2d PencilSystem::residual_sup() const {
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    for (int c = 0; c < 2; ++c) {
        const SolutionColumn& col = sys.columns[static_cast<std::size_t>(c)];
        const NodeTables& tab = *col.ctx->tables;
        const std::vector<int>& perm = col.ctx->perm;
        const PanelGrid& grid = tab.grid;
        const std::size_t nodes = grid.node_count();
        for (std::size_t node = 0; node < nodes; ++node) {
            const Complex* m = tab.m_at(node);
            Complex s[2];
            for (int row = 0; row < 2; ++row) {
                Complex acc = -m[row * 2 + col.k_pos];
                for (int l = 0; l < 2; ++l) acc += m[row * 2 + l] * col.z.at(l, node);
                s[perm[static_cast<std::size_t>(row)]] = acc;
            }
            Complex s1 = s[0] + s[1];
            Complex s2 = (s[0] - s[1]) / col.b_k;
            out(0, c) = std::max(out(0, c), std::abs(s1));
            out(1, c) = std::max(out(1, c), std::abs(s2));
        }
    }
    return out;
}

Complex PencilSystem::det_at_alpha() const {
    return u(1, alpha) * u1(2, alpha) - u(2, alpha) * u1(1, alpha);
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

PencilSystem pencil_fss(const PencilSpec& p, double alpha, Complex z,
                        const Tolerances& tol) {
    if (std::abs(z) == 0.0)
        throw std::invalid_argument("pencil_fss: z = 0 is below every threshold");

    PencilSystem ps;
    ps.alpha = alpha;
    ps.z = z;
    ps.pencil = p;
    ps.conjugated_ = z.imag() > 0.0;
    ps.z_solve = ps.conjugated_ ? -z : z;
    ps.solved = ps.conjugated_
                    ? PencilSpec{p.sigma, p.p0.scaled(Complex(-1.0, 0.0))}
                    : p;
    ps.lambda = ps.z_solve * kI;

    SystemSpec reduced = reduce_pencil(ps.solved);
    // lambda lies in the closed right half-plane; both quadrants carry the
    // same decreasing order of Re(lambda b), so the numbering is identity.
    int kappa = ps.lambda.imag() >= 0.0 ? 1 : 4;
    ps.sys = build_fss(reduced, alpha, kappa, ps.lambda, tol);

    for (int c = 0; c < 2; ++c) {
        Complex expect(c == 0 ? 1.0 : -1.0, 0.0);
        if (std::abs(ps.sys.columns[static_cast<std::size_t>(c)].b_k - expect) > 0.0)
            throw std::logic_error("pencil_fss: unexpected column numbering");
    }
    return ps;
}

// ---------------------------------------------------------------------------
// Finite-difference verification helpers
// ---------------------------------------------------------------------------

namespace {

double default_step(const PencilSystem& ps) {
    return std::min(1e-4, 5e-3 / std::max(1.0, std::abs(ps.z)));
}

/// Boundaries the FD stencils must not straddle: coefficient knots plus the
/// numerical seams at alpha (left extension) and the working cut.
std::vector<double> stencil_barriers(const PencilSystem& ps) {
    std::vector<double> b = ps.pencil.sigma.breakpoints();
    const std::vector<double>& b2 = ps.pencil.p0.breakpoints();
    b.insert(b.end(), b2.begin(), b2.end());
    b.push_back(ps.alpha);
    b.push_back(ps.sys.columns[0].ctx->tables->grid.cut());
    std::sort(b.begin(), b.end());
    return b;
}

struct StencilPlan {
    double h = 0.0;
    int dir = 0; ///< 0 central, +1 right-sided, -1 left-sided
    bool ok = false;
};

/// Chooses step and sidedness so that the open stencil interval contains no
/// barrier; x sitting on a barrier resolves to the right-sided stencil.
StencilPlan plan_stencil(const std::vector<double>& barriers, double x, double h) {
    StencilPlan plan;
    double left_gap = x; // domain boundary at 0
    double right_gap = std::numeric_limits<double>::infinity();
    for (double b : barriers) {
        if (b < x - 1e-12)
            left_gap = std::min(left_gap, x - b);
        else if (b > x + 1e-12)
            right_gap = std::min(right_gap, b - x);
        else {
            left_gap = 0.0;
        }
    }
    if (left_gap >= 2.5 * h && right_gap >= 2.5 * h) {
        plan.h = h;
        plan.dir = 0;
    } else if (right_gap >= 4.5 * h) {
        plan.h = h;
        plan.dir = 1;
    } else if (left_gap >= 4.5 * h) {
        plan.h = h;
        plan.dir = -1;
    } else {
        double gap = std::max(left_gap, right_gap);
        if (gap < 1e-8) return plan; // wedged between barriers: skip the point
        plan.h = gap / 5.0;
        plan.dir = right_gap >= left_gap ? 1 : -1;
    }
    plan.ok = true;
    return plan;
}

template <class F>
Complex fd_derivative(const F& f, double x, const StencilPlan& plan) {
    const double h = plan.h;
    if (plan.dir == 0)
        return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) /
               (12.0 * h);
    const double s = plan.dir > 0 ? 1.0 : -1.0;
    return s *
           (-25.0 * f(x) + 48.0 * f(x + s * h) - 36.0 * f(x + s * 2 * h) +
            16.0 * f(x + s * 3 * h) - 3.0 * f(x + s * 4 * h)) /
           (12.0 * h);
}

} // namespace

double quasi_derivative_defect(const PencilSystem& ps, int k,
                               const std::vector<double>& xs, double h) {
    if (h <= 0.0) h = default_step(ps);
    std::vector<double> barriers = stencil_barriers(ps);
    double worst = 0.0;
    for (double x : xs) {
        StencilPlan plan = plan_stencil(barriers, x, h);
        if (!plan.ok) continue;
        Complex du = fd_derivative([&](double t) { return ps.u(k, t); }, x, plan);
        Complex defect = du - ps.pencil.sigma(x) * ps.u(k, x) - ps.u1(k, x);
        worst = std::max(worst, std::abs(defect));
    }
    return worst;
}

double regularized_residual(const PencilSystem& ps, int k,
                            const std::vector<double>& xs, double h) {
    if (h <= 0.0) h = default_step(ps);
    std::vector<double> barriers = stencil_barriers(ps);
    double worst = 0.0;
    for (double x : xs) {
        StencilPlan plan = plan_stencil(barriers, x, h);
        if (!plan.ok) continue;
        Complex du1 = fd_derivative([&](double t) { return ps.u1(k, t); }, x, plan);
        Complex sig = ps.pencil.sigma(x);
        Complex uv = ps.u(k, x);
        Complex r = -du1 - sig * ps.u1(k, x) - sig * sig * uv +
                    ps.z * ps.pencil.p0(x) * uv - ps.z * ps.z * uv;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

} // namespace halfline
