#include "halfline/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace halfline {

namespace {

// Panel-local phase budget: in-panel exponential factors stay below
// exp(phase_cap), so products of node values and anchors cannot overflow.
inline Complex cexp(Complex z) { return std::exp(z); }

struct TopCell {
    double score;
    double s, x;
};

void push_top(std::vector<TopCell>& top, std::size_t cap, double score, double s, double x) {
    if (top.size() < cap) {
        top.push_back({score, s, x});
        std::sort(top.begin(), top.end(),
                  [](const TopCell& a, const TopCell& b) { return a.score > b.score; });
        return;
    }
    if (score <= top.back().score) return;
    top.back() = {score, s, x};
    std::sort(top.begin(), top.end(),
              [](const TopCell& a, const TopCell& b) { return a.score > b.score; });
}

} // namespace

// ---------------------------------------------------------------------------
// BCVector
// ---------------------------------------------------------------------------

double BCVector::max_abs() const {
    double m = 0.0;
    for (const Complex& z : v_) m = std::max(m, std::abs(z));
    return m;
}

double BCVector::max_abs_diff(const BCVector& other) const {
    if (other.v_.size() != v_.size())
        throw std::invalid_argument("BCVector: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i)
        m = std::max(m, std::abs(v_[i] - other.v_[i]));
    return m;
}

Complex BCVector::eval_p(const PanelGrid& grid, int comp, double P) const {
    int i = grid.find_by_p(P);
    const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
    double u = std::clamp((P - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half(), -1.0, 1.0);
    double w[Gauss7::N];
    Gauss7::instance().interp_to(u, w);
    const Complex* c = comp_data(comp) + PanelGrid::node_index(i, 0);
    Complex acc(0.0, 0.0);
    for (int q = 0; q < Gauss7::N; ++q) acc += w[q] * c[q];
    return acc;
}

void BCVector::set_constant(int comp, Complex value) {
    Complex* c = comp_data(comp);
    for (std::size_t i = 0; i < nodes_; ++i) c[i] = value;
}

void BCVector::fill_zero() { std::fill(v_.begin(), v_.end(), Complex(0.0, 0.0)); }

// ---------------------------------------------------------------------------
// Node tables
// ---------------------------------------------------------------------------

double phase_rate(const std::vector<Complex>& b, Complex omega) {
    double m = 0.0;
    for (Complex bj : b) m = std::max(m, std::abs(bj - omega));
    return 2.0 * m; // also dominates every |b_j - b_l|
}

double dp_cap_for(double lambda_abs, double c_phase, const Tolerances& tol) {
    double cap = tol.dp_max;
    if (lambda_abs * c_phase > 0.0)
        cap = std::min(cap, tol.phase_cap / (lambda_abs * c_phase));
    return cap;
}

std::shared_ptr<const NodeTables> make_node_tables(const SystemSpec& spec,
                                                   const PropagatorMatrix& M,
                                                   double dp_cap,
                                                   const Tolerances& tol) {
    auto tab = std::make_shared<NodeTables>(NodeTables{
        PanelGrid(spec.rho, M.alpha(), M.cut(), spec.breakpoints(), dp_cap), spec.rho,
        spec.b, spec.n, {}, {}, {}, {}, 0.0, {}, M.entry_bound(), {}, {}});

    const int n = spec.n;
    const std::size_t nn = tab->nn();
    const std::size_t nodes = tab->grid.node_count();
    const std::size_t neta = spec.C.size();
    const Gauss7& G = Gauss7::instance();

    CoeffMatrix D = build_D(spec);

    tab->q.resize(nodes * nn);
    tab->g.resize(neta);
    for (auto& ge : tab->g) ge.resize(nodes * nn);
    tab->q_norm.assign(nn, 0.0);
    tab->g_norm.assign(neta, std::vector<double>(nn, 0.0));
    tab->g_tail.assign(neta, 0.0);
    tab->m_node.assign(nodes * nn, Complex(0.0, 0.0));

    // Propagator factors at every node.  On the diagonal path the cumulative
    // exponents are accumulated panel by panel with the same rule, which
    // avoids one adaptive quadrature per node.
    std::vector<Complex> mfac(nodes * static_cast<std::size_t>(n));
    if (M.diagonal()) {
        std::vector<Complex> carry(static_cast<std::size_t>(n), Complex(0.0, 0.0));
        std::vector<Complex> at(Gauss7::N);
        for (int i = 0; i < tab->grid.count(); ++i) {
            const Panel& pn = tab->grid.panels()[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) {
                const CoefficientFunction& a = spec.A(j, j);
                Complex full(0.0, 0.0);
                for (int q = 0; q < Gauss7::N; ++q) {
                    at[static_cast<std::size_t>(q)] =
                        a.is_zero() ? Complex(0.0)
                                    : a(pn.x[q]) / spec.rho(pn.x[q]) * pn.half();
                    full += G.weight[q] * at[static_cast<std::size_t>(q)];
                }
                for (int g = 0; g < Gauss7::N; ++g) {
                    Complex part(0.0, 0.0);
                    for (int q = 0; q < Gauss7::N; ++q)
                        part += G.partial[g][q] * at[static_cast<std::size_t>(q)];
                    mfac[PanelGrid::node_index(i, g) * n + j] =
                        std::exp(carry[static_cast<std::size_t>(j)] + part);
                }
                carry[static_cast<std::size_t>(j)] += full;
            }
        }
    }

    Eigen::MatrixXcd Ax(n, n), Cx(n, n);
    for (int i = 0; i < tab->grid.count(); ++i) {
        const Panel& pn = tab->grid.panels()[static_cast<std::size_t>(i)];
        for (int g = 0; g < Gauss7::N; ++g) {
            double x = pn.x[g];
            double inv_rho = 1.0 / spec.rho(x);
            std::size_t node = PanelGrid::node_index(i, g);
            double w = G.weight[g] * pn.half();

            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    const CoefficientFunction& a = spec.A(j, l);
                    Complex av = a.is_zero() ? Complex(0.0) : a(x);
                    if (!D(j, l).is_zero()) av -= D(j, l)(x);
                    Ax(j, l) = av;
                    for (std::size_t eta = 0; eta < neta; ++eta) {
                        const CoefficientFunction& c = spec.C[eta](j, l);
                        tab->g[eta][node * nn + j * n + l] =
                            c.is_zero() ? Complex(0.0) : c(x);
                    }
                }

            if (M.diagonal()) {
                const Complex* mf = mfac.data() + node * n;
                for (int j = 0; j < n; ++j) {
                    tab->m_node[node * nn + j * n + j] = mf[j];
                    for (int l = 0; l < n; ++l) {
                        Complex conj_f = mf[l] / mf[j] * inv_rho;
                        tab->q[node * nn + j * n + l] = Ax(j, l) * conj_f;
                        for (std::size_t eta = 0; eta < neta; ++eta)
                            tab->g[eta][node * nn + j * n + l] *= conj_f;
                    }
                }
            } else {
                Eigen::MatrixXcd Minv = M.eval_inv(x);
                Eigen::MatrixXcd Mx = M.eval(x);
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        tab->m_node[node * nn + j * n + l] = Mx(j, l);
                Eigen::MatrixXcd Qx = Minv * Ax * Mx * inv_rho;
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        tab->q[node * nn + j * n + l] = Qx(j, l);
                for (std::size_t eta = 0; eta < neta; ++eta) {
                    for (int j = 0; j < n; ++j)
                        for (int l = 0; l < n; ++l)
                            Cx(j, l) = tab->g[eta][node * nn + j * n + l];
                    Eigen::MatrixXcd Gx = Minv * Cx * Mx * inv_rho;
                    for (int j = 0; j < n; ++j)
                        for (int l = 0; l < n; ++l)
                            tab->g[eta][node * nn + j * n + l] = Gx(j, l);
                }
            }

            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    tab->q_norm[j * n + l] += w * std::abs(tab->q[node * nn + j * n + l]);
                    for (std::size_t eta = 0; eta < neta; ++eta)
                        tab->g_norm[eta][j * n + l] +=
                            w * std::abs(tab->g[eta][node * nn + j * n + l]);
                }
        }
    }

    // Mass beyond the cut: conjugation bounded by m_hat^2, entries of A - D
    // (those with b_j != b_l) and of each C_eta summed.
    double cut = tab->grid.cut();
    double mm = tab->m_hat * tab->m_hat;
    double qa = 0.0;
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            if (spec.b[static_cast<std::size_t>(j)] != spec.b[static_cast<std::size_t>(l)] &&
                !spec.A(j, l).is_zero())
                qa += spec.A(j, l).tail_norms(cut).l1;
    tab->q_tail = mm * qa;
    tab->c_raw_norm.assign(neta, 0.0);
    for (std::size_t eta = 0; eta < neta; ++eta) {
        double s = 0.0, raw = 0.0;
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                if (!spec.C[eta](j, l).is_zero()) {
                    s += spec.C[eta](j, l).tail_norms(cut).l1;
                    raw = std::max(raw, spec.C[eta](j, l).tail_norms(M.alpha()).l1);
                }
        tab->g_tail[eta] = mm * s;
        tab->c_raw_norm[eta] = raw;
    }

    (void)tol;
    return tab;
}

// ---------------------------------------------------------------------------
// KernelContext
// ---------------------------------------------------------------------------

KernelContext::KernelContext(std::shared_ptr<const NodeTables> tab, int pivot0,
                             Complex omega, Complex lambda, const Tolerances& tol)
    : tab_(std::move(tab)), pivot0_(pivot0), omega_(omega), lambda_(lambda), tol_(tol) {
    const int n = tab_->n;
    if (pivot0 < 0 || pivot0 >= n) throw std::out_of_range("kernel context: pivot");
    if (lambda == Complex(0.0, 0.0))
        throw std::domain_error("kernel context: lambda = 0");
    auto oc = check_ordering(tab_->b, pivot0, omega, lambda, tol.ordering_slack);
    if (!oc.ok)
        throw OrderingError("kernel context: Re(lambda b) ordering violated, slack " +
                            std::to_string(oc.min_slack));
    ordering_slack_ = oc.min_slack;

    mu_.resize(static_cast<std::size_t>(n));
    double worst_rate = 0.0;
    for (int j = 0; j < n; ++j) {
        mu_[static_cast<std::size_t>(j)] = lambda * (tab_->b[static_cast<std::size_t>(j)] - omega);
        worst_rate = std::max(worst_rate, 2.0 * std::abs(mu_[static_cast<std::size_t>(j)]));
    }
    double max_dp = 0.0;
    for (const Panel& pn : tab_->grid.panels()) max_dp = std::max(max_dp, pn.dp());
    if (max_dp * worst_rate > tol.phase_cap * (1.0 + 1e-9) &&
        max_dp * worst_rate > 1e-12)
        throw std::invalid_argument("kernel context: grid too coarse for this lambda");

    const std::size_t nn = tab_->nn();
    const std::size_t nodes = tab_->grid.node_count();
    const std::size_t neta = tab_->g.size();
    double r = std::abs(lambda);

    vt_.assign(nodes * nn, Complex(0.0, 0.0));
    rt_.assign(nodes * nn, Complex(0.0, 0.0));
    std::vector<Complex> lam_pow(neta);
    Complex w(1.0, 0.0);
    for (std::size_t eta = 0; eta < neta; ++eta) {
        w /= lambda;
        lam_pow[eta] = w;
    }
    for (std::size_t i = 0; i < nodes * nn; ++i) {
        Complex rv(0.0, 0.0);
        for (std::size_t eta = 0; eta < neta; ++eta) rv += lam_pow[eta] * tab_->g[eta][i];
        rt_[i] = rv;
        vt_[i] = tab_->q[i] + rv;
    }

    v_norm_.assign(nn, 0.0);
    r_norm_.assign(nn, 0.0);
    v_tail_ = tab_->q_tail;
    r_tail_ = 0.0;
    double rp = 1.0;
    for (std::size_t eta = 0; eta < neta; ++eta) {
        rp /= r;
        r_tail_ += rp * tab_->g_tail[eta];
    }
    v_tail_ += r_tail_;
    for (std::size_t e = 0; e < nn; ++e) {
        double rn = 0.0;
        rp = 1.0;
        for (std::size_t eta = 0; eta < neta; ++eta) {
            rp /= r;
            rn += rp * tab_->g_norm[eta][e];
        }
        r_norm_[e] = rn + r_tail_;
        v_norm_[e] = tab_->q_norm[e] + rn + v_tail_;
    }
}

double KernelContext::v_entry_norm(int j, int l) const {
    return v_norm_[static_cast<std::size_t>(j) * tab_->n + l];
}

double KernelContext::v_row_sum() const {
    const int n = tab_->n;
    double m = 0.0;
    for (int j = 0; j < n; ++j) {
        double row = 0.0;
        for (int l = 0; l < n; ++l) row += v_norm_[static_cast<std::size_t>(j) * n + l];
        m = std::max(m, row);
    }
    return m;
}

double KernelContext::v_total_sum() const {
    double s = 0.0;
    for (double v : v_norm_) s += v;
    return s;
}

double KernelContext::kappa_sup() const {
    double m = 0.0;
    for (double v : r_norm_) m = std::max(m, v);
    return m;
}

double KernelContext::gamma_alpha() const {
    double g = 0.0, rp = 1.0, r = std::abs(lambda_);
    for (std::size_t eta = 0; eta < tab_->c_raw_norm.size(); ++eta) {
        rp /= r;
        g += rp * tab_->c_raw_norm[eta];
    }
    return g;
}

bool KernelContext::range_for(int j, int l, double S, double X, Range& r) const {
    const bool jlow = j < pivot0_;
    const bool llow = l < pivot0_;
    const double pa = tab_->grid.p_alpha(), pc = tab_->grid.p_cut();
    if (jlow && llow) {
        if (X >= S) return false;
        r = {X, S, +1};
    } else if (jlow && !llow) {
        r = {std::max(S, X), pc, +1};
    } else if (!jlow && llow) {
        r = {pa, std::min(S, X), +1};
    } else {
        if (S >= X) return false;
        r = {S, X, +1};
    }
    r.lo = std::max(r.lo, pa);
    r.hi = std::min(r.hi, pc);
    return r.hi > r.lo + 1e-15;
}

// Sum over panels intersecting [P_lo, P_hi] of the anchored two-factor
// quadrature.  Both anchor exponents are certified <= 0 on the directed
// ranges, and in-panel factors stay within the phase budget.
Complex KernelContext::panel_sum(const Complex* base, int j, int l, double S, double X,
                                 double P_lo, double P_hi) const {
    const PanelGrid& grid = tab_->grid;
    const Gauss7& G = Gauss7::instance();
    const std::size_t nn = tab_->nn();
    const std::size_t entry = static_cast<std::size_t>(j) * tab_->n + l;
    const Complex mu_j = mu_[static_cast<std::size_t>(j)];
    const Complex mu_l = mu_[static_cast<std::size_t>(l)];

    int i0 = grid.find_by_p(P_lo), i1 = grid.find_by_p(P_hi);
    Complex acc(0.0, 0.0);
    double wlo[Gauss7::N], whi[Gauss7::N];
    for (int i = i0; i <= i1; ++i) {
        const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
        double A = std::max(pn.p_lo, P_lo), B = std::min(pn.p_hi, P_hi);
        if (!(B > A + 1e-16)) continue;
        const double* wq = G.weight.data();
        bool partial = (A > pn.p_lo + 1e-15) || (B < pn.p_hi - 1e-15);
        double wdiff[Gauss7::N];
        if (partial) {
            double ua = (A - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half();
            double ub = (B - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half();
            G.partial_to(std::clamp(ua, -1.0, 1.0), wlo);
            G.partial_to(std::clamp(ub, -1.0, 1.0), whi);
            for (int q = 0; q < Gauss7::N; ++q) wdiff[q] = whi[q] - wlo[q];
            wq = wdiff;
        }
        Complex anchor = cexp(mu_l * (A - S) + mu_j * (X - B));
        Complex local(0.0, 0.0);
        const Complex* vals = base + PanelGrid::node_index(i, 0) * nn + entry;
        for (int q = 0; q < Gauss7::N; ++q) {
            Complex f = vals[static_cast<std::size_t>(q) * nn];
            if (f == Complex(0.0, 0.0)) continue;
            Complex e = cexp(mu_l * (pn.p[q] - A) + mu_j * (B - pn.p[q]));
            local += wq[q] * f * e;
        }
        acc += anchor * local * pn.half();
    }
    return acc;
}

Complex KernelContext::directed_integral(bool kappa_only, int j, int l, double s,
                                         double x) const {
    double S = tab_->rho.phase(s), X = tab_->rho.phase(x);
    Range r;
    if (!range_for(j, l, S, X, r)) return Complex(0.0, 0.0);
    const Complex* base = kappa_only ? rt_.data() : tab_->q.data();
    return panel_sum(base, j, l, S, X, r.lo, r.hi);
}

Complex KernelContext::eval_nu(int j, int l, double s, double x) const {
    return directed_integral(false, j, l, s, x);
}

Complex KernelContext::eval_kappa(int j, int l, double s, double x) const {
    return directed_integral(true, j, l, s, x);
}

ThetaResult KernelContext::theta_hat(int grid_samples, int refine_top) const {
    const PanelGrid& grid = tab_->grid;
    const Gauss7& G = Gauss7::instance();
    const int n = tab_->n;
    const int count = grid.count();
    const std::size_t nn = tab_->nn();
    const double pa = grid.p_alpha();
    const double pc = grid.p_cut();

    ThetaResult out;
    out.tail = tab_->q_tail;

    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            if (tab_->b[static_cast<std::size_t>(j)] == tab_->b[static_cast<std::size_t>(l)])
                continue; // q_jl vanishes identically
            const std::size_t entry = static_cast<std::size_t>(j) * n + l;
            const Complex mu_j = mu_[static_cast<std::size_t>(j)];
            const Complex mu_l = mu_[static_cast<std::size_t>(l)];
            const bool jlow = j < pivot0_;
            const bool llow = l < pivot0_;

            double pair_sup = 0.0;
            double refined = 0.0;

            if (jlow != llow) {
                // One-sided kernels collapse to a 1D envelope: the (s,x)
                // prefactors have modulus <= 1 and equal 1 at s = x = m, so
                // sup |nu_jl| = sup_m |E(m)| with E the one-sided integral.
                const Complex zeta = mu_l - mu_j;
                std::vector<Complex> ec(static_cast<std::size_t>(count) + 1,
                                        Complex(0.0, 0.0)); // envelope at panel edges
                double best = 0.0, best_p = jlow ? pa : pc;
                auto note = [&](double score, double P) {
                    if (score > best) {
                        best = score;
                        best_p = P;
                    }
                };
                if (jlow) { // E(m) = int_m^cut q e^{zeta(P-m)} dP, Re zeta <= 0
                    Complex carry(0.0, 0.0);
                    for (int i = count - 1; i >= 0; --i) {
                        const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                        const Complex* vals =
                            tab_->q.data() + PanelGrid::node_index(i, 0) * nn + entry;
                        Complex full(0.0, 0.0);
                        Complex partials[Gauss7::N];
                        for (int g = 0; g < Gauss7::N; ++g) partials[g] = Complex(0.0, 0.0);
                        for (int q = 0; q < Gauss7::N; ++q) {
                            Complex w = vals[static_cast<std::size_t>(q) * nn] *
                                        cexp(zeta * (pn.p[q] - pn.p_lo)) * pn.half();
                            full += G.weight[q] * w;
                            for (int g = 0; g < Gauss7::N; ++g)
                                partials[g] += G.partial[g][q] * w;
                        }
                        for (int g = 0; g < Gauss7::N; ++g) {
                            Complex val = (full - partials[g]) *
                                              cexp(zeta * (pn.p_lo - pn.p[g])) +
                                          cexp(zeta * (pn.p_hi - pn.p[g])) * carry;
                            note(std::abs(val), pn.p[g]);
                        }
                        carry = full + cexp(zeta * pn.dp()) * carry;
                        ec[static_cast<std::size_t>(i)] = carry;
                        note(std::abs(carry), pn.p_lo);
                    }
                } else { // E(m) = int_alpha^m q e^{zeta(P-m)} dP, Re zeta >= 0
                    Complex carry(0.0, 0.0);
                    for (int i = 0; i < count; ++i) {
                        const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                        const Complex* vals =
                            tab_->q.data() + PanelGrid::node_index(i, 0) * nn + entry;
                        Complex full(0.0, 0.0);
                        Complex partials[Gauss7::N];
                        for (int g = 0; g < Gauss7::N; ++g) partials[g] = Complex(0.0, 0.0);
                        for (int q = 0; q < Gauss7::N; ++q) {
                            Complex w = vals[static_cast<std::size_t>(q) * nn] *
                                        cexp(zeta * (pn.p[q] - pn.p_hi)) * pn.half();
                            full += G.weight[q] * w;
                            for (int g = 0; g < Gauss7::N; ++g)
                                partials[g] += G.partial[g][q] * w;
                        }
                        for (int g = 0; g < Gauss7::N; ++g) {
                            Complex val = cexp(zeta * (pn.p_lo - pn.p[g])) * carry +
                                          partials[g] * cexp(zeta * (pn.p_hi - pn.p[g]));
                            note(std::abs(val), pn.p[g]);
                        }
                        carry = cexp(zeta * (-pn.dp())) * carry + full;
                        ec[static_cast<std::size_t>(i) + 1] = carry;
                        note(std::abs(carry), pn.p_hi);
                    }
                }
                pair_sup = best;

                // exact in-panel evaluation of the envelope from the stored
                // edge values, then a sample + golden pass around the best cell
                auto env = [&](double P) -> double {
                    P = std::clamp(P, pa, pc);
                    int i = grid.find_by_p(P);
                    const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                    double u = std::clamp(
                        (P - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half(), -1.0, 1.0);
                    double pw[Gauss7::N];
                    G.partial_to(u, pw);
                    const Complex* vals =
                        tab_->q.data() + PanelGrid::node_index(i, 0) * nn + entry;
                    Complex full(0.0, 0.0), part(0.0, 0.0);
                    if (jlow) {
                        for (int q = 0; q < Gauss7::N; ++q) {
                            Complex w = vals[static_cast<std::size_t>(q) * nn] *
                                        cexp(zeta * (pn.p[q] - pn.p_lo)) * pn.half();
                            full += G.weight[q] * w;
                            part += pw[q] * w;
                        }
                        return std::abs((full - part) * cexp(zeta * (pn.p_lo - P)) +
                                        cexp(zeta * (pn.p_hi - P)) *
                                            ec[static_cast<std::size_t>(i) + 1]);
                    }
                    for (int q = 0; q < Gauss7::N; ++q) {
                        Complex w = vals[static_cast<std::size_t>(q) * nn] *
                                    cexp(zeta * (pn.p[q] - pn.p_hi)) * pn.half();
                        part += pw[q] * w;
                    }
                    return std::abs(cexp(zeta * (pn.p_lo - P)) *
                                        ec[static_cast<std::size_t>(i)] +
                                    part * cexp(zeta * (pn.p_hi - P)));
                };
                int ip = grid.find_by_p(best_p);
                double lo = grid.panels()[static_cast<std::size_t>(std::max(ip - 1, 0))].p_lo;
                double hi = grid.panels()[static_cast<std::size_t>(
                                              std::min(ip + 1, count - 1))].p_hi;
                refined = best;
                double rb = best_p;
                const int coarse = 24;
                for (int m = 0; m <= coarse; ++m) {
                    double P = lo + (hi - lo) * m / coarse;
                    double v = env(P);
                    if (v > refined) {
                        refined = v;
                        rb = P;
                    }
                }
                double a = std::max(lo, rb - (hi - lo) / coarse);
                double b = std::min(hi, rb + (hi - lo) / coarse);
                const double gr = 0.6180339887498949;
                double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
                double f1 = env(c1), f2 = env(c2);
                for (int it = 0; it < 24; ++it) {
                    if (f1 < f2) {
                        a = c1;
                        c1 = c2;
                        f1 = f2;
                        c2 = a + gr * (b - a);
                        f2 = env(c2);
                    } else {
                        b = c2;
                        c2 = c1;
                        f2 = f1;
                        c1 = b - gr * (b - a);
                        f1 = env(c1);
                    }
                }
                refined = std::max(refined, std::max(f1, f2));
            } else {
                // Same-side kernels: 2D sweep, s on a stratified edge grid and
                // x on every panel edge via the stable carry recursion, then
                // coordinate refinement of the best cells with exact values.
                std::vector<TopCell> top;
                const std::size_t cap = static_cast<std::size_t>(std::max(1, refine_top));
                auto record = [&](double score, double sp, double xp) {
                    pair_sup = std::max(pair_sup, score);
                    push_top(top, cap, score, sp, xp);
                };
                int samples = std::min(count, std::max(8, grid_samples));
                for (int si = 1; si <= samples; ++si) {
                    int sp = (jlow ? si : si - 1) * count / samples;
                    sp = std::clamp(sp, 0, count);
                    double S, sx;
                    if (jlow) { // x < s: sweep x downward from s
                        const Panel& pnS = grid.panels()[static_cast<std::size_t>(
                            std::min(sp, count - 1))];
                        S = (sp == count) ? pc : pnS.p_lo;
                        sx = (sp == count) ? grid.cut() : pnS.x_lo;
                        if (S <= pa + 1e-15) continue;
                        Complex carry(0.0, 0.0);
                        for (int i = std::min(sp, count) - 1; i >= 0; --i) {
                            const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                            Complex local(0.0, 0.0);
                            const Complex* vals =
                                tab_->q.data() + PanelGrid::node_index(i, 0) * nn + entry;
                            Complex anchor = cexp(mu_l * (pn.p_hi - S));
                            for (int q = 0; q < Gauss7::N; ++q) {
                                Complex f = vals[static_cast<std::size_t>(q) * nn];
                                Complex e = cexp(mu_l * (pn.p[q] - pn.p_hi) +
                                                 mu_j * (pn.p_lo - pn.p[q]));
                                local += G.weight[q] * f * e;
                            }
                            carry = anchor * local * pn.half() +
                                    cexp(mu_j * (-pn.dp())) * carry;
                            record(std::abs(carry), sx, pn.x_lo);
                        }
                    } else { // x > s: sweep x upward from s
                        const Panel& pnS = grid.panels()[static_cast<std::size_t>(
                            std::min(sp, count - 1))];
                        S = pnS.p_lo;
                        sx = pnS.x_lo;
                        if (S >= pc - 1e-15) continue;
                        Complex carry(0.0, 0.0);
                        for (int i = sp; i < count; ++i) {
                            const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                            Complex local(0.0, 0.0);
                            const Complex* vals =
                                tab_->q.data() + PanelGrid::node_index(i, 0) * nn + entry;
                            Complex anchor = cexp(mu_l * (pn.p_lo - S));
                            for (int q = 0; q < Gauss7::N; ++q) {
                                Complex f = vals[static_cast<std::size_t>(q) * nn];
                                Complex e = cexp(mu_l * (pn.p[q] - pn.p_lo) +
                                                 mu_j * (pn.p_hi - pn.p[q]));
                                local += G.weight[q] * f * e;
                            }
                            carry = anchor * local * pn.half() +
                                    cexp(mu_j * pn.dp()) * carry;
                            record(std::abs(carry), sx, pn.x_hi);
                        }
                    }
                }

                refined = pair_sup;
                for (const TopCell& c : top) {
                    double bs = c.s, bx = c.x;
                    int is = grid.find_by_x(std::clamp(bs, grid.alpha(), grid.cut()));
                    int ix = grid.find_by_x(std::clamp(bx, grid.alpha(), grid.cut()));
                    double hs = grid.panels()[static_cast<std::size_t>(is)].x_hi -
                                grid.panels()[static_cast<std::size_t>(is)].x_lo;
                    double hx = grid.panels()[static_cast<std::size_t>(ix)].x_hi -
                                grid.panels()[static_cast<std::size_t>(ix)].x_lo;
                    // the s sweep is stratified: widen its window to the stride
                    hs = std::max(hs, (grid.cut() - grid.alpha()) /
                                          std::max(1, std::min(count, grid_samples)));
                    double bv = std::abs(eval_nu(j, l, bs, bx));
                    for (int round = 0; round < 2; ++round) {
                        for (int coord = 0; coord < 2; ++coord) {
                            double lo = (coord == 0 ? bs - hs : bx - hx);
                            double hi = (coord == 0 ? bs + hs : bx + hx);
                            lo = std::max(lo, grid.alpha());
                            hi = std::min(hi, grid.cut());
                            const double gr = 0.6180339887498949;
                            double a = lo, b = hi;
                            auto score = [&](double t) {
                                return coord == 0 ? std::abs(eval_nu(j, l, t, bx))
                                                  : std::abs(eval_nu(j, l, bs, t));
                            };
                            double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
                            double f1 = score(c1), f2 = score(c2);
                            for (int it = 0; it < 16; ++it) {
                                if (f1 < f2) {
                                    a = c1;
                                    c1 = c2;
                                    f1 = f2;
                                    c2 = a + gr * (b - a);
                                    f2 = score(c2);
                                } else {
                                    b = c2;
                                    c2 = c1;
                                    f2 = f1;
                                    c1 = b - gr * (b - a);
                                    f1 = score(c1);
                                }
                            }
                            double t = 0.5 * (a + b), fv = score(t);
                            if (fv > bv) {
                                bv = fv;
                                (coord == 0 ? bs : bx) = t;
                            }
                        }
                        hs *= 0.35;
                        hx *= 0.35;
                    }
                    refined = std::max(refined, bv);
                }
            }

            out.grid_value = std::max(out.grid_value, pair_sup);
            out.value = std::max(out.value, refined);
        }

    out.value += out.tail;
    return out;
}

void KernelContext::apply_V(const BCVector& z, BCVector& out) const {
    const PanelGrid& grid = tab_->grid;
    const Gauss7& G = Gauss7::instance();
    const int n = tab_->n;
    const int count = grid.count();
    const std::size_t nn = tab_->nn();
    const std::size_t nodes = grid.node_count();
    if (z.components() != n || z.nodes() != nodes)
        throw std::invalid_argument("apply_V: vector/grid mismatch");
    if (out.components() != n || out.nodes() != nodes) out = BCVector(n, nodes);

    std::vector<Complex> w(Gauss7::N);
    for (int j = 0; j < n; ++j) {
        const Complex mu_j = mu_[static_cast<std::size_t>(j)];
        Complex* fj = out.comp_data(j);
        if (j >= pivot0_) {
            // forward: f_j(x) = sum_l int_alpha^x v_jl z_l e^{mu_j(X-P)} dP
            Complex carry(0.0, 0.0); // value at the panel's lower edge
            for (int i = 0; i < count; ++i) {
                const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                std::size_t base = PanelGrid::node_index(i, 0);
                for (int q = 0; q < Gauss7::N; ++q) {
                    Complex acc(0.0, 0.0);
                    const Complex* vrow = vt_.data() + (base + q) * nn +
                                          static_cast<std::size_t>(j) * n;
                    for (int l = 0; l < n; ++l) acc += vrow[l] * z.at(l, base + q);
                    w[static_cast<std::size_t>(q)] =
                        acc * cexp(mu_j * (pn.p_hi - pn.p[q])) * pn.half();
                }
                Complex full(0.0, 0.0);
                for (int q = 0; q < Gauss7::N; ++q)
                    full += G.weight[q] * w[static_cast<std::size_t>(q)];
                for (int g = 0; g < Gauss7::N; ++g) {
                    Complex partial(0.0, 0.0);
                    for (int q = 0; q < Gauss7::N; ++q)
                        partial += G.partial[g][q] * w[static_cast<std::size_t>(q)];
                    fj[base + g] = cexp(mu_j * (pn.p[g] - pn.p_lo)) * carry +
                                   cexp(mu_j * (pn.p[g] - pn.p_hi)) * partial;
                }
                // re-anchor at the next lower edge: both factors stay <= 1
                carry = cexp(mu_j * pn.dp()) * carry + full;
            }
        } else {
            // backward: f_j(x) = -sum_l int_x^cut v_jl z_l e^{mu_j(X-P)} dP
            Complex carry(0.0, 0.0); // integral from the panel's upper edge to cut
            for (int i = count - 1; i >= 0; --i) {
                const Panel& pn = grid.panels()[static_cast<std::size_t>(i)];
                std::size_t base = PanelGrid::node_index(i, 0);
                for (int q = 0; q < Gauss7::N; ++q) {
                    Complex acc(0.0, 0.0);
                    const Complex* vrow = vt_.data() + (base + q) * nn +
                                          static_cast<std::size_t>(j) * n;
                    for (int l = 0; l < n; ++l) acc += vrow[l] * z.at(l, base + q);
                    w[static_cast<std::size_t>(q)] =
                        acc * cexp(mu_j * (pn.p_lo - pn.p[q])) * pn.half();
                }
                Complex full(0.0, 0.0);
                for (int q = 0; q < Gauss7::N; ++q)
                    full += G.weight[q] * w[static_cast<std::size_t>(q)];
                for (int g = 0; g < Gauss7::N; ++g) {
                    Complex partial(0.0, 0.0);
                    for (int q = 0; q < Gauss7::N; ++q)
                        partial += G.partial[g][q] * w[static_cast<std::size_t>(q)];
                    Complex rest = full - partial; // int_{P_g}^{B}, anchored at A
                    fj[base + g] = -(cexp(mu_j * (pn.p[g] - pn.p_hi)) * carry +
                                     cexp(mu_j * (pn.p[g] - pn.p_lo)) * rest);
                }
                carry = cexp(mu_j * (-pn.dp())) * carry + full;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Psi functional.  With F(x) = int_0^x f(t) e^{i lam (x-t)} dt and
// H(x) = int_x^T f(t) e^{i lam (t-x)} dt the two orderings become
//   psi(s, x) = F(x) - e^{i lam (x-s)} F(s)   (x >= s),
//   psi(s, x) = H(x) - e^{i lam (s-x)} H(s)   (s >= x),
// and every exponential factor has modulus <= 1, so the evaluation is stable
// where the naive antiderivative e^{i lam x} int f e^{-i lam t} overflows.
// ---------------------------------------------------------------------------
namespace {

class PsiTable {
public:
    PsiTable(const CoefficientFunction& f, Complex lambda, const Tolerances& tol)
        : f_(&f), il_(Complex(0.0, 1.0) * lambda) {
        double T = std::max(f.support_bound(std::max(tol.tail, 1e-14)), 1.0);
        std::vector<double> marks{0.0, T};
        for (double b : f.breakpoints())
            if (b > 0.0 && b < T) marks.push_back(b);
        std::sort(marks.begin(), marks.end());
        double h_max = tol.dp_max;
        double rate = std::abs(lambda);
        if (rate > 0.0) h_max = std::min(h_max, tol.phase_cap / rate);
        edge_.push_back(0.0);
        for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
            double lo = marks[i], hi = marks[i + 1];
            if (hi - lo < 1e-15) continue;
            int parts = static_cast<int>(std::ceil((hi - lo) / h_max));
            if (edge_.size() + static_cast<std::size_t>(parts) > 4'000'000)
                throw IntegrationError("psi_sup: oscillation grid too fine");
            for (int k = 1; k <= parts; ++k)
                edge_.push_back(lo + (hi - lo) * k / parts);
        }
        const std::size_t N = edge_.size() - 1;
        F_.assign(N + 1, Complex(0.0, 0.0));
        H_.assign(N + 1, Complex(0.0, 0.0));
        for (std::size_t k = 0; k < N; ++k)
            F_[k + 1] = cexp(il_ * (edge_[k + 1] - edge_[k])) * F_[k] +
                        segment(edge_[k], edge_[k + 1], edge_[k + 1], true);
        for (std::size_t k = N; k-- > 0;)
            H_[k] = cexp(il_ * (edge_[k + 1] - edge_[k])) * H_[k + 1] +
                    segment(edge_[k], edge_[k + 1], edge_[k], false);
    }

    const std::vector<double>& edges() const { return edge_; }
    double cut() const { return edge_.back(); }

    double at_edges(std::size_t i, std::size_t j) const {
        // |psi| at s = edge_[i], x = edge_[j] (either ordering).
        if (i <= j)
            return std::abs(F_[j] - cexp(il_ * (edge_[j] - edge_[i])) * F_[i]);
        return std::abs(H_[j] - cexp(il_ * (edge_[i] - edge_[j])) * H_[i]);
    }

    double at(double s, double x) const {
        if (s <= x) return std::abs(evalF(x) - cexp(il_ * (x - s)) * evalF(s));
        return std::abs(evalH(x) - cexp(il_ * (s - x)) * evalH(s));
    }

private:
    // int_lo^hi f(t) e^{i lam (anchor-t)} dt for anchor = hi (forward) or
    // anchor = lo (backward); the exponent is <= 0 in real part on [lo, hi].
    Complex segment(double lo, double hi, double anchor, bool forward) const {
        const Gauss7& G = Gauss7::instance();
        double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        Complex acc(0.0, 0.0);
        for (int q = 0; q < Gauss7::N; ++q) {
            double t = mid + half * G.node[q];
            Complex ph = forward ? il_ * (anchor - t) : il_ * (t - anchor);
            acc += G.weight[q] * (*f_)(t)*cexp(ph);
        }
        return acc * half;
    }

    std::size_t panel_of(double y) const {
        auto it = std::upper_bound(edge_.begin(), edge_.end(), y);
        std::size_t k = static_cast<std::size_t>(it - edge_.begin());
        if (k == 0) return 0;
        if (k >= edge_.size()) return edge_.size() - 2;
        return k - 1;
    }

    Complex evalF(double y) const {
        y = std::clamp(y, 0.0, cut());
        std::size_t k = panel_of(y);
        return cexp(il_ * (y - edge_[k])) * F_[k] + segment(edge_[k], y, y, true);
    }

    Complex evalH(double y) const {
        y = std::clamp(y, 0.0, cut());
        std::size_t k = panel_of(y);
        return cexp(il_ * (edge_[k + 1] - y)) * H_[k + 1] +
               segment(y, edge_[k + 1], y, false);
    }

    const CoefficientFunction* f_;
    Complex il_;
    std::vector<double> edge_;
    std::vector<Complex> F_, H_;
};

} // namespace

ThetaResult psi_sup(const CoefficientFunction& f, Complex lambda, int grid_samples,
                    int refine_top, const Tolerances& tol) {
    ThetaResult out;
    if (f.is_zero()) return out;
    if (lambda.imag() < -1e-15)
        throw std::invalid_argument("psi_sup: lambda must lie in the closed upper half-plane");

    PsiTable table(f, lambda, tol);
    out.tail = f.tail_norms(table.cut()).l1;

    // Coarse sweep: one endpoint on an index-equidistributed subset of the
    // panel edges, the other over (nearly) every edge.  The dense coordinate
    // is essential: narrow interference maxima sit a few oscillation periods
    // off the diagonal and are invisible on a subset-by-subset grid whenever
    // a flat far-field plateau dominates it.
    const std::size_t E = table.edges().size();
    const std::size_t S = std::min<std::size_t>(std::max(grid_samples, 2), E);
    std::vector<std::size_t> idx(S);
    for (std::size_t m = 0; m < S; ++m) idx[m] = m * (E - 1) / (S - 1);
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

    std::vector<TopCell> top;
    const std::size_t cap = static_cast<std::size_t>(std::max(1, refine_top));
    const std::size_t stride = std::max<std::size_t>(1, E / 65536);
    // psi is not symmetric in (s, x), so cover both orientations of each
    // (coarse, dense) pair.
    auto visit = [&](std::size_t i, std::size_t e) {
        push_top(top, cap, table.at_edges(i, e), table.edges()[i], table.edges()[e]);
        push_top(top, cap, table.at_edges(e, i), table.edges()[e], table.edges()[i]);
    };
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const std::size_t i = idx[a];
        for (std::size_t e = 0; e < E; e += stride) visit(i, e);
        // keep the near-diagonal band at full resolution when striding
        for (std::size_t d = 1; d < stride; d <<= 1) {
            if (i + d < E) visit(i, i + d);
            if (i >= d) visit(i, i - d);
        }
    }
    out.grid_value = top.empty() ? 0.0 : top.front().score;

    // Local refinement: shrinking 5x5 sweeps around each top cell.
    double best = out.grid_value;
    const double step0 = table.cut() / static_cast<double>(S - 1);
    for (const TopCell& cell : top) {
        double cs = cell.s, cx = cell.x, span = step0;
        for (int round = 0; round < 10; ++round) {
            double bs = cs, bx = cx, bv = table.at(cs, cx);
            for (int i = -2; i <= 2; ++i)
                for (int j = -2; j <= 2; ++j) {
                    double s = std::clamp(cs + span * i / 2.0, 0.0, table.cut());
                    double x = std::clamp(cx + span * j / 2.0, 0.0, table.cut());
                    double v = table.at(s, x);
                    if (v > bv) {
                        bv = v;
                        bs = s;
                        bx = x;
                    }
                }
            cs = bs;
            cx = bx;
            best = std::max(best, bv);
            span *= 0.5;
        }
    }
    out.value = best + out.tail;

    double l1 = f.tail_norms(0.0).l1;
    if (out.value > l1 * (1.0 + 1e-9) + 1e-12)
        throw std::logic_error("psi_sup exceeded the L1 bound");
    return out;
}

// ---------------------------------------------------------------------------
// Psi on a tabulated conjugated entry.  Same cumulant scheme as above with
// the integrand sampled at the existing panel nodes; partial-panel integrals
// use the Gauss partial weights on the node values times the (phase-capped)
// in-panel exponential, exactly like the directed-kernel quadrature.
// ---------------------------------------------------------------------------
ThetaResult psi_entry(const NodeTables& tab, int j, int l, Complex lambda_tilde,
                      int grid_samples, int refine_top) {
    ThetaResult out;
    out.tail = tab.q_tail;
    const std::size_t entry = static_cast<std::size_t>(j) * tab.n + l;
    if (tab.q_norm[entry] == 0.0 && out.tail == 0.0) return out;
    if (lambda_tilde.imag() < -1e-15)
        throw std::invalid_argument("psi_entry: lambda must lie in the closed upper half-plane");

    const Gauss7& G = Gauss7::instance();
    const PanelGrid& grid = tab.grid;
    const int count = grid.count();
    const std::size_t nn = tab.nn();
    const Complex il = Complex(0.0, 1.0) * lambda_tilde;

    auto fval = [&](int panel, int q) {
        return tab.q.data()[PanelGrid::node_index(panel, q) * nn + entry];
    };

    std::vector<Complex> F(static_cast<std::size_t>(count) + 1, Complex(0.0, 0.0));
    std::vector<Complex> H(static_cast<std::size_t>(count) + 1, Complex(0.0, 0.0));
    for (int k = 0; k < count; ++k) {
        const Panel& pn = grid.panels()[static_cast<std::size_t>(k)];
        Complex acc(0.0, 0.0);
        for (int q = 0; q < Gauss7::N; ++q)
            acc += G.weight[q] * fval(k, q) * cexp(il * (pn.p_hi - pn.p[q]));
        F[static_cast<std::size_t>(k) + 1] =
            cexp(il * pn.dp()) * F[static_cast<std::size_t>(k)] + acc * pn.half();
    }
    for (int k = count; k-- > 0;) {
        const Panel& pn = grid.panels()[static_cast<std::size_t>(k)];
        Complex acc(0.0, 0.0);
        for (int q = 0; q < Gauss7::N; ++q)
            acc += G.weight[q] * fval(k, q) * cexp(il * (pn.p[q] - pn.p_lo));
        H[static_cast<std::size_t>(k)] =
            cexp(il * pn.dp()) * H[static_cast<std::size_t>(k) + 1] + acc * pn.half();
    }

    auto edge_p = [&](std::size_t k) {
        return k == 0 ? grid.p_alpha() : grid.panels()[k - 1].p_hi;
    };
    auto evalF = [&](double y) {
        int k = grid.find_by_p(y);
        const Panel& pn = grid.panels()[static_cast<std::size_t>(k)];
        double u = std::clamp((y - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half(), -1.0, 1.0);
        double w[Gauss7::N];
        G.partial_to(u, w);
        Complex acc(0.0, 0.0);
        for (int q = 0; q < Gauss7::N; ++q)
            acc += w[q] * fval(k, q) * cexp(il * (y - pn.p[q]));
        return cexp(il * (y - pn.p_lo)) * F[static_cast<std::size_t>(k)] + acc * pn.half();
    };
    auto evalH = [&](double y) {
        int k = grid.find_by_p(y);
        const Panel& pn = grid.panels()[static_cast<std::size_t>(k)];
        double u = std::clamp((y - 0.5 * (pn.p_lo + pn.p_hi)) / pn.half(), -1.0, 1.0);
        double w[Gauss7::N];
        G.partial_to(u, w);
        Complex acc(0.0, 0.0);
        for (int q = 0; q < Gauss7::N; ++q)
            acc += (G.weight[q] - w[q]) * fval(k, q) * cexp(il * (pn.p[q] - y));
        return cexp(il * (pn.p_hi - y)) * H[static_cast<std::size_t>(k) + 1] +
               acc * pn.half();
    };
    auto at = [&](double ps, double px) {
        if (ps <= px) return std::abs(evalF(px) - cexp(il * (px - ps)) * evalF(ps));
        return std::abs(evalH(px) - cexp(il * (ps - px)) * evalH(ps));
    };

    // Same stratified-by-dense sweep as psi_sup: one endpoint coarse, the
    // other over every edge, so near-diagonal interference maxima cannot
    // hide behind a flat far-field plateau.
    auto at_edges = [&](std::size_t i, std::size_t e) {
        double pi = edge_p(i), pe = edge_p(e);
        return (i <= e) ? std::abs(F[e] - cexp(il * (pe - pi)) * F[i])
                        : std::abs(H[e] - cexp(il * (pi - pe)) * H[i]);
    };
    const std::size_t E = static_cast<std::size_t>(count) + 1;
    const std::size_t S = std::min<std::size_t>(std::max(grid_samples, 2), E);
    std::vector<std::size_t> idx(S);
    for (std::size_t m = 0; m < S; ++m) idx[m] = m * (E - 1) / (S - 1);
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

    std::vector<TopCell> top;
    const std::size_t cap = static_cast<std::size_t>(std::max(1, refine_top));
    const std::size_t stride = std::max<std::size_t>(1, E / 65536);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const std::size_t i = idx[a];
        for (std::size_t e = 0; e < E; e += stride)
            push_top(top, cap, at_edges(i, e), edge_p(i), edge_p(e));
        for (std::size_t d = 1; d < stride; d <<= 1) {
            if (i + d < E)
                push_top(top, cap, at_edges(i, i + d), edge_p(i), edge_p(i + d));
            if (i >= d)
                push_top(top, cap, at_edges(i, i - d), edge_p(i), edge_p(i - d));
        }
    }
    out.grid_value = top.empty() ? 0.0 : top.front().score;

    double best = out.grid_value;
    const double span0 = (grid.p_cut() - grid.p_alpha()) / static_cast<double>(S - 1);
    for (const TopCell& cell : top) {
        double cs = cell.s, cx = cell.x, span = span0;
        for (int round = 0; round < 10; ++round) {
            double bs = cs, bx = cx, bv = at(cs, cx);
            for (int a = -2; a <= 2; ++a)
                for (int b = -2; b <= 2; ++b) {
                    double s = std::clamp(cs + span * a / 2.0, grid.p_alpha(), grid.p_cut());
                    double x = std::clamp(cx + span * b / 2.0, grid.p_alpha(), grid.p_cut());
                    double v = at(s, x);
                    if (v > bv) {
                        bv = v;
                        bs = s;
                        bx = x;
                    }
                }
            cs = bs;
            cx = bx;
            best = std::max(best, bv);
            span *= 0.5;
        }
    }
    out.value = best + out.tail;
    return out;
}

// ---------------------------------------------------------------------------
// Partial L2 mass along a ray.
// ---------------------------------------------------------------------------
namespace {

struct RayQuad {
    const std::function<double(Complex)>* g;
    Complex origin, dir;
    double tol;
    long evals = 0;

    double sq(double r) {
        double v = (*g)(origin + r * dir);
        ++evals;
        if (!std::isfinite(v)) throw IntegrationError("l2_along_ray: non-finite sample");
        return v * v;
    }

    double simpson(double a, double fa, double m, double fm, double b, double fb) const {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }

    double adapt(double a, double fa, double m, double fm, double b, double fb,
                 double whole, int depth) {
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = sq(lm), frm = sq(rm);
        double left = simpson(a, fa, lm, flm, m, fm);
        double right = simpson(m, fm, rm, frm, b, fb);
        double err = left + right - whole;
        if (depth <= 0 || std::abs(err) <= 15.0 * (tol * std::abs(left + right) + 1e-300))
            return left + right + err / 15.0;
        return adapt(a, fa, lm, flm, m, fm, left, depth - 1) +
               adapt(m, fm, rm, frm, b, fb, right, depth - 1);
    }

    double run(double a, double b) {
        double m = 0.5 * (a + b);
        double fa = sq(a), fm = sq(m), fb = sq(b);
        return adapt(a, fa, m, fm, b, fb, simpson(a, fa, m, fm, b, fb), 24);
    }
};

} // namespace

RayL2Report l2_along_ray(const std::function<double(Complex)>& g, Complex origin,
                         Complex direction, double r_max, double quad_tol) {
    if (!(std::abs(direction) > 0.0))
        throw std::invalid_argument("l2_along_ray: zero direction");
    if (!(r_max > 0.0)) throw std::invalid_argument("l2_along_ray: r_max must be positive");
    Complex dir = direction / std::abs(direction);

    RayQuad quad{&g, origin, dir, std::max(quad_tol, 1e-14), 0};
    RayL2Report rep;
    double q1 = quad.run(0.0, 0.25 * r_max);
    double q2 = quad.run(0.25 * r_max, 0.5 * r_max);
    double q3 = quad.run(0.5 * r_max, r_max);
    rep.quarter = q1;
    rep.half = q1 + q2;
    rep.total = q1 + q2 + q3;
    rep.increment_ratio = q3 / std::max(q2, 1e-300);
    rep.tail_fraction = q3 / std::max(rep.total, 1e-300);
    rep.evals = quad.evals;
    return rep;
}

} // namespace halfline
