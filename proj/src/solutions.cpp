#include "halfline/solutions.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace halfline {

namespace {

SystemSpec permuted_system(const SystemSpec& spec, const std::vector<int>& perm) {
    const int n = spec.n;
    bool identity = true;
    for (int i = 0; i < n; ++i)
        if (perm[static_cast<std::size_t>(i)] != i) identity = false;
    if (identity) return spec;

    std::vector<Complex> b(static_cast<std::size_t>(n));
    CoeffMatrix A(n);
    std::vector<CoeffMatrix> C(spec.C.size(), CoeffMatrix(n));
    for (int i = 0; i < n; ++i) {
        int pi = perm[static_cast<std::size_t>(i)];
        b[static_cast<std::size_t>(i)] = spec.b[static_cast<std::size_t>(pi)];
        for (int j = 0; j < n; ++j) {
            int pj = perm[static_cast<std::size_t>(j)];
            A(i, j) = spec.A(pi, pj);
            for (std::size_t eta = 0; eta < spec.C.size(); ++eta)
                C[eta](i, j) = spec.C[eta](pi, pj);
        }
    }
    return make_system(n, std::move(b), std::move(A), std::move(C), spec.rho);
}

/// Weight-independent phase rate valid for every conjugation weight omega
/// with |omega| <= max|b| (all weights used here are characteristic numbers
/// or unit-modulus combinations of them).
double uniform_phase_rate(const std::vector<Complex>& b) {
    double mb = 0.0;
    for (Complex v : b) mb = std::max(mb, std::abs(v));
    return 4.0 * mb;
}

std::shared_ptr<const ColumnContext> make_context(const SystemSpec& spec,
                                                  const std::vector<int>& perm,
                                                  double alpha, double lambda_abs,
                                                  const Tolerances& tol) {
    auto ctx = std::make_shared<ColumnContext>();
    ctx->pspec = permuted_system(spec, perm);
    ctx->perm = perm;
    ctx->M = std::make_shared<PropagatorMatrix>(ctx->pspec, alpha, tol);
    double dp = dp_cap_for(lambda_abs, uniform_phase_rate(spec.b), tol);
    ctx->tables = make_node_tables(ctx->pspec, *ctx->M, dp, tol);
    return ctx;
}

double rho_sup_estimate(const WeightFunction& rho, double a, double b) {
    double m = 0.0;
    for (int i = 0; i <= 64; ++i)
        m = std::max(m, rho(a + (b - a) * i / 64.0));
    for (double t : rho.breakpoints())
        if (t > a && t < b) m = std::max(m, std::max(rho(t), rho(t - 1e-12)));
    return m;
}

double observed_envelope(const NodeTables& tab, const BCVector& z) {
    const int n = tab.n;
    double sup = 0.0;
    for (std::size_t node = 0; node < tab.grid.node_count(); ++node) {
        const Complex* m = tab.m_at(node);
        for (int j = 0; j < n; ++j) {
            Complex acc(0.0, 0.0);
            for (int l = 0; l < n; ++l) acc += m[j * n + l] * z.at(l, node);
            sup = std::max(sup, std::abs(acc));
        }
    }
    return sup;
}

/// w_k(x) = e^{lambda (b_k - omega)(p(x) - p(alpha))} e_k at the grid nodes.
BCVector anchor_vector(const NodeTables& tab, int k_pos, Complex b_k, Complex omega,
                       Complex lambda) {
    BCVector w(tab.n, tab.grid.node_count());
    Complex rate = lambda * (b_k - omega);
    double p_alpha = tab.grid.p_alpha();
    if (rate == Complex(0.0, 0.0)) {
        w.set_constant(k_pos, Complex(1.0, 0.0));
        return w;
    }
    for (int i = 0; i < tab.grid.count(); ++i) {
        const Panel& pn = tab.grid.panels()[static_cast<std::size_t>(i)];
        for (int g = 0; g < Gauss7::N; ++g)
            w.at(k_pos, PanelGrid::node_index(i, g)) =
                std::exp(rate * (pn.p[g] - p_alpha));
    }
    return w;
}

std::string side_name(LargeSide s) {
    switch (s) {
        case LargeSide::mid: return "mid";
        case LargeSide::gamma1: return "gamma1";
        case LargeSide::gammasigma: return "gammasigma";
        default: return "auto";
    }
}

} // namespace

// ---------------------------------------------------------------------------
// SolutionSystem evaluation
// ---------------------------------------------------------------------------

Eigen::VectorXcd SolutionSystem::z_at_alpha(int c) const {
    const SolutionColumn& col = columns[static_cast<std::size_t>(c)];
    const PanelGrid& grid = col.ctx->tables->grid;
    Eigen::VectorXcd v(n);
    for (int j = 0; j < n; ++j) v(j) = col.z.eval_p(grid, j, grid.p_alpha());
    return v;
}

Eigen::VectorXcd SolutionSystem::eval_bounded(int c, double x) const {
    const SolutionColumn& col = columns[static_cast<std::size_t>(c)];
    const std::vector<int>& perm = col.ctx->perm;
    const PanelGrid& grid = col.ctx->tables->grid;
    double P = col.ctx->pspec.rho.phase(x);
    Eigen::VectorXcd out(n);
    if (x < alpha) {
        if (!col.has_left)
            throw std::out_of_range("eval_bounded: no extension below alpha");
        Eigen::VectorXcd yp = col.left.eval(x);
        Complex undo = std::exp(-lambda * col.omega * (P - grid.p_alpha()));
        for (int j = 0; j < n; ++j)
            out(perm[static_cast<std::size_t>(j)]) = yp(j) * undo;
        return out;
    }
    Eigen::VectorXcd zv(n);
    double p_cut = grid.p_cut();
    if (P <= p_cut) {
        for (int j = 0; j < n; ++j) zv(j) = col.z.eval_p(grid, j, P);
    } else {
        // Beyond the working cut the kernels carry no mass: backward rows of
        // z revert to the anchor, forward rows keep their accumulated value
        // damped by the surviving conjugation exponential.
        Complex rate = lambda * (col.b_k - col.omega);
        for (int j = 0; j < n; ++j) {
            Complex wp = j == col.k_pos ? std::exp(rate * (P - grid.p_alpha()))
                                        : Complex(0.0, 0.0);
            zv(j) = wp;
            if (j >= col.pivot0) {
                Complex wc = j == col.k_pos
                                 ? std::exp(rate * (p_cut - grid.p_alpha()))
                                 : Complex(0.0, 0.0);
                Complex zc = col.z.eval_p(grid, j, p_cut);
                Complex mu = lambda * (col.ctx->pspec.b[static_cast<std::size_t>(j)] -
                                       col.omega);
                zv(j) += std::exp(mu * (P - p_cut)) * (zc - wc);
            }
        }
    }
    Eigen::VectorXcd yp = col.ctx->M->eval(x) * zv;
    for (int j = 0; j < n; ++j) out(perm[static_cast<std::size_t>(j)]) = yp(j);
    return out;
}

Eigen::VectorXcd SolutionSystem::eval_column(int c, double x) const {
    const SolutionColumn& col = columns[static_cast<std::size_t>(c)];
    if (x < alpha) {
        if (!col.has_left)
            throw std::out_of_range("eval_column: no extension below alpha");
        const std::vector<int>& perm = col.ctx->perm;
        Eigen::VectorXcd yp = col.left.eval(x);
        Eigen::VectorXcd out(n);
        for (int j = 0; j < n; ++j) out(perm[static_cast<std::size_t>(j)]) = yp(j);
        return out;
    }
    const PanelGrid& grid = col.ctx->tables->grid;
    double P = col.ctx->pspec.rho.phase(x);
    Complex factor = std::exp(lambda * col.omega * (P - grid.p_alpha()));
    return eval_bounded(c, x) * factor;
}

Eigen::MatrixXcd SolutionSystem::eval_matrix(double x) const {
    Eigen::MatrixXcd Y(n, cols());
    for (int c = 0; c < cols(); ++c) Y.col(c) = eval_column(c, x);
    return Y;
}

Complex SolutionSystem::det_at_alpha() const {
    if (cols() != n) throw std::logic_error("det_at_alpha: system is not square");
    Eigen::MatrixXcd Y(n, n);
    for (int c = 0; c < n; ++c) {
        const SolutionColumn& col = columns[static_cast<std::size_t>(c)];
        Eigen::VectorXcd zv = z_at_alpha(c);
        for (int j = 0; j < n; ++j)
            Y(col.ctx->perm[static_cast<std::size_t>(j)], c) = zv(j);
    }
    return Y.determinant();
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

SolutionSystem build_fss(const SystemSpec& spec, double alpha, int kappa, Complex lambda,
                         const Tolerances& tol,
                         std::shared_ptr<const ColumnContext> shared_ctx) {
    SectorGeometry geo =
        spec.roots_of_unity ? formula_sectors(spec.n) : compute_sectors(spec.b);
    const Sector& sec = geo.by_kappa(kappa);
    if (!sec.arc.contains_closure(lambda, 1e-9))
        throw std::domain_error("build_fss: lambda outside the closed sector");

    std::shared_ptr<const ColumnContext> ctx = shared_ctx;
    if (ctx) {
        if (ctx->perm != sec.perm)
            throw std::invalid_argument("build_fss: shared context has a different ordering");
    } else {
        ctx = make_context(spec, sec.perm, alpha, std::abs(lambda), tol);
    }

    SolutionSystem sys;
    sys.alpha = alpha;
    sys.lambda = lambda;
    sys.n = spec.n;
    {
        std::ostringstream tag;
        tag << "sector " << kappa;
        sys.region = tag.str();
    }
    sys.m_start = 1;

    for (int k = 0; k < spec.n; ++k) {
        SolutionColumn col;
        col.ctx = ctx;
        col.k_pos = k;
        col.k_orig = sec.perm[static_cast<std::size_t>(k)];
        col.pivot0 = k;
        col.b_k = ctx->pspec.b[static_cast<std::size_t>(k)];
        col.omega = col.b_k;
        KernelContext kctx(ctx->tables, k, col.omega, lambda, tol);
        BCVector w = anchor_vector(*ctx->tables, k, col.b_k, col.omega, lambda);
        FixedPointResult res = solve_fixed_point(kctx, ctx->pspec, w, tol);
        col.z = std::move(res.z);
        col.cert = std::move(res.cert);
        col.env_sup = observed_envelope(*ctx->tables, col.z);
        sys.columns.push_back(std::move(col));
    }
    if (alpha > 0.0) extend_to_zero(sys, tol);
    return sys;
}

SolutionSystem build_large_sector(const SystemSpec& spec, double alpha, int m,
                                  Complex lambda, const Tolerances& tol, LargeSide side,
                                  std::shared_ptr<const ColumnContext> shared_ctx) {
    LargeSectorData data = large_sector(spec, m);
    if (!data.omega_region.contains_closure(lambda, 1e-9))
        throw std::domain_error("build_large_sector: lambda outside the two-sector region");

    if (side == LargeSide::automatic_side) {
        if (data.lambda_region.contains_closure(lambda, 1e-9))
            side = LargeSide::mid;
        else if (data.gamma1.contains_closure(lambda, 1e-9))
            side = LargeSide::gamma1;
        else
            side = LargeSide::gammasigma;
    }
    Complex omega;
    switch (side) {
        case LargeSide::mid:
            if (!data.lambda_region.contains_closure(lambda, 1e-9))
                throw std::domain_error("build_large_sector: lambda outside the mid strip");
            omega = data.omega_mid;
            break;
        case LargeSide::gamma1:
            if (!data.gamma1.contains_closure(lambda, 1e-9))
                throw std::domain_error("build_large_sector: lambda outside the first sector");
            omega = data.omega_gamma1;
            break;
        default:
            if (!data.gammasigma.contains_closure(lambda, 1e-9))
                throw std::domain_error(
                    "build_large_sector: lambda outside the neighboring sector");
            omega = data.omega_gammasigma;
            break;
    }

    std::vector<int> identity(static_cast<std::size_t>(spec.n));
    std::iota(identity.begin(), identity.end(), 0);
    std::shared_ptr<const ColumnContext> ctx = shared_ctx;
    if (ctx) {
        if (ctx->perm != identity)
            throw std::invalid_argument(
                "build_large_sector: shared context must use the canonical ordering");
    } else {
        ctx = make_context(spec, identity, alpha, std::abs(lambda), tol);
    }

    SolutionSystem sys;
    sys.alpha = alpha;
    sys.lambda = lambda;
    sys.n = spec.n;
    {
        std::ostringstream tag;
        tag << "large m=" << m << " " << side_name(side);
        sys.region = tag.str();
    }
    sys.m_start = m;

    KernelContext kctx(ctx->tables, m - 1, omega, lambda, tol);
    for (int k = m - 1; k < spec.n; ++k) {
        SolutionColumn col;
        col.ctx = ctx;
        col.k_pos = k;
        col.k_orig = k;
        col.pivot0 = m - 1;
        col.b_k = spec.b[static_cast<std::size_t>(k)];
        col.omega = omega;
        BCVector w = anchor_vector(*ctx->tables, k, col.b_k, omega, lambda);
        FixedPointResult res = solve_fixed_point(kctx, ctx->pspec, w, tol);
        col.z = std::move(res.z);
        col.cert = std::move(res.cert);
        col.env_sup = observed_envelope(*ctx->tables, col.z);
        sys.columns.push_back(std::move(col));
    }
    if (alpha > 0.0) extend_to_zero(sys, tol);
    return sys;
}

SolutionSystem supplement_fss(const SolutionSystem& large, const SolutionSystem& fss) {
    if (large.n != fss.n) throw std::invalid_argument("supplement_fss: size mismatch");
    if (large.alpha != fss.alpha)
        throw std::invalid_argument("supplement_fss: alpha mismatch");
    if (!approx_equal(large.lambda, fss.lambda, 1e-12))
        throw std::invalid_argument("supplement_fss: lambda mismatch");
    if (fss.cols() != fss.n)
        throw std::invalid_argument("supplement_fss: second argument is not fundamental");
    int m = large.m_start;
    if (large.cols() != large.n - m + 1)
        throw std::invalid_argument("supplement_fss: incomplete large-sector system");

    SolutionSystem sys;
    sys.alpha = large.alpha;
    sys.lambda = large.lambda;
    sys.n = large.n;
    {
        std::ostringstream tag;
        tag << "supplemented m=" << m;
        sys.region = tag.str();
    }
    sys.m_start = 1;
    for (int c = 0; c < m - 1; ++c)
        sys.columns.push_back(fss.columns[static_cast<std::size_t>(c)]);
    for (const SolutionColumn& col : large.columns) sys.columns.push_back(col);

    Complex det = sys.det_at_alpha();
    if (std::abs(det) < 1e-10)
        throw DegeneracyError("supplement_fss: column matrix degenerate at the left endpoint");
    return sys;
}

void extend_to_zero(SolutionSystem& sys, const Tolerances& tol) {
    if (sys.alpha <= 0.0) return;
    for (SolutionColumn& col : sys.columns) {
        const SystemSpec& sp = col.ctx->pspec;
        const int n = sp.n;
        Complex lambda = sys.lambda;

        std::vector<Complex> lam_pow(sp.C.size());
        for (std::size_t eta = 0; eta < sp.C.size(); ++eta)
            lam_pow[eta] = std::pow(lambda, -static_cast<double>(eta + 1));

        auto f = [&sp, lambda, &lam_pow, n](double x, const Eigen::VectorXcd& y,
                                            Eigen::VectorXcd& dy) {
            dy.setZero(n);
            double r = sp.rho(x);
            for (int j = 0; j < n; ++j) {
                Complex acc = lambda * sp.b[static_cast<std::size_t>(j)] * r * y(j);
                for (int l = 0; l < n; ++l) {
                    const CoefficientFunction& a = sp.A(j, l);
                    Complex s = a.is_zero() ? Complex(0.0) : a(x);
                    for (std::size_t eta = 0; eta < sp.C.size(); ++eta) {
                        const CoefficientFunction& cf = sp.C[eta](j, l);
                        if (!cf.is_zero()) s += lam_pow[eta] * cf(x);
                    }
                    acc += s * y(l);
                }
                dy(j) = acc;
            }
        };

        const PanelGrid& grid = col.ctx->tables->grid;
        Eigen::VectorXcd y0(n);
        for (int j = 0; j < n; ++j) y0(j) = col.z.eval_p(grid, j, grid.p_alpha());

        std::vector<double> forced;
        for (double t : sp.breakpoints())
            if (t > 0.0 && t < sys.alpha) forced.push_back(t);
        double mb = 0.0;
        for (Complex v : sp.b) mb = std::max(mb, std::abs(v));
        double rate = std::abs(lambda) * mb * rho_sup_estimate(sp.rho, 0.0, sys.alpha);
        double hmax = std::min(0.1, tol.phase_cap / (rate + 1.0));

        col.left = integrate_dense(f, y0, sys.alpha, 0.0, tol.ode, forced, hmax);
        col.has_left = true;
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

ResidualData extract_residuals(const SolutionSystem& sys, int stride) {
    const int n = sys.n;
    ResidualData out;
    out.sup = Eigen::MatrixXd::Zero(n, sys.cols());

    int max_count = 0;
    for (const SolutionColumn& col : sys.columns)
        max_count = std::max(max_count, col.ctx->tables->grid.count());
    if (stride <= 0) stride = std::max(1, max_count / 256);

    std::vector<std::size_t> sample_slots;
    for (int c = 0; c < sys.cols(); ++c) {
        const SolutionColumn& col = sys.columns[static_cast<std::size_t>(c)];
        const NodeTables& tab = *col.ctx->tables;
        const PanelGrid& grid = tab.grid;
        Complex rate = sys.lambda * (col.omega - col.b_k);
        double p_alpha = grid.p_alpha();

        if (c == 0) {
            for (int i = 0; i < grid.count(); i += stride) {
                out.xs.push_back(grid.panels()[static_cast<std::size_t>(i)].x[0]);
                sample_slots.push_back(static_cast<std::size_t>(i));
            }
            out.samples.assign(out.xs.size(), Eigen::MatrixXcd::Zero(n, sys.cols()));
        }

        std::size_t slot = 0;
        for (int i = 0; i < grid.count(); ++i) {
            const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
            bool record = slot < sample_slots.size() &&
                          sample_slots[slot] == static_cast<std::size_t>(i);
            for (int g = 0; g < Gauss7::N; ++g) {
                std::size_t node = PanelGrid::node_index(i, g);
                const Complex* mv = tab.m_at(node);
                Complex factor = rate == Complex(0.0, 0.0)
                                     ? Complex(1.0, 0.0)
                                     : std::exp(rate * (pn.p[g] - p_alpha));
                for (int j = 0; j < n; ++j) {
                    Complex acc(0.0, 0.0);
                    for (int l = 0; l < n; ++l) {
                        Complex zt = col.z.at(l, node) * factor;
                        if (l == col.k_pos) zt -= 1.0;
                        acc += mv[j * n + l] * zt;
                    }
                    int jo = col.ctx->perm[static_cast<std::size_t>(j)];
                    out.sup(jo, c) = std::max(out.sup(jo, c), std::abs(acc));
                    if (record && g == 0) out.samples[slot](jo, c) = acc;
                }
            }
            if (record) ++slot;
        }
    }
    return out;
}

double verify_integral_residual(const SolutionSystem& sys, int refine,
                                const Tolerances& tol) {
    if (refine < 1) throw std::invalid_argument("verify_integral_residual: refine >= 1");
    double worst = 0.0;
    std::map<const ColumnContext*, std::shared_ptr<const NodeTables>> fine;
    for (const SolutionColumn& col : sys.columns) {
        const ColumnContext* key = col.ctx.get();
        auto it = fine.find(key);
        if (it == fine.end()) {
            double dp = 0.0;
            for (const Panel& pn : col.ctx->tables->grid.panels())
                dp = std::max(dp, pn.dp());
            auto tabs = make_node_tables(col.ctx->pspec, *col.ctx->M, dp / refine, tol);
            it = fine.emplace(key, std::move(tabs)).first;
        }
        const NodeTables& ft = *it->second;
        const PanelGrid& fgrid = ft.grid;
        const PanelGrid& cgrid = col.ctx->tables->grid;
        const int n = sys.n;

        BCVector zf(n, fgrid.node_count());
        for (int i = 0; i < fgrid.count(); ++i) {
            const Panel& pn = fgrid.panels()[static_cast<std::size_t>(i)];
            for (int g = 0; g < Gauss7::N; ++g)
                for (int j = 0; j < n; ++j)
                    zf.at(j, PanelGrid::node_index(i, g)) =
                        col.z.eval_p(cgrid, j, pn.p[g]);
        }
        BCVector wf = anchor_vector(ft, col.k_pos, col.b_k, col.omega, sys.lambda);
        KernelContext kctx(it->second, col.pivot0, col.omega, sys.lambda, tol);
        BCVector vz;
        kctx.apply_V(zf, vz);
        for (int j = 0; j < n; ++j)
            for (std::size_t node = 0; node < fgrid.node_count(); ++node)
                worst = std::max(worst, std::abs(zf.at(j, node) - wf.at(j, node) -
                                                 vz.at(j, node)));
    }
    return worst;
}

AnalyticityReport verify_analyticity(const std::function<Complex(Complex)>& f,
                                     Complex center, double radius, int nodes) {
    if (nodes < 8) throw std::invalid_argument("verify_analyticity: too few nodes");
    AnalyticityReport rep;
    Complex integral(0.0, 0.0), mean(0.0, 0.0);
    for (int q = 0; q < nodes; ++q) {
        double th = 2.0 * pi() * q / nodes;
        Complex dir = std::polar(1.0, th);
        Complex fv = f(center + radius * dir);
        rep.scale = std::max(rep.scale, std::abs(fv));
        integral += fv * Complex(0.0, 1.0) * radius * dir;
        mean += fv;
    }
    integral *= 2.0 * pi() / nodes;
    mean /= static_cast<double>(nodes);
    Complex fc = f(center);
    rep.scale = std::max(rep.scale, std::abs(fc));
    rep.contour_defect = std::abs(integral);
    rep.cauchy_error = std::abs(mean - fc);
    return rep;
}

} // namespace halfline
