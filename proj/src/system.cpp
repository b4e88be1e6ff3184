#include "halfline/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace halfline {

namespace {

double snap(double v) {
    static const double targets[] = {0.0, 1.0, -1.0, 0.5, -0.5};
    for (double t : targets)
        if (std::abs(v - t) < 4e-16) return t;
    return v;
}

} // namespace

double SystemSpec::a_const() const {
    double m = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) m = std::max(m, A(j, k).tail_norms(0.0).l1);
    return n * m;
}

double SystemSpec::norm_A_minus_D(double alpha) const {
    double m = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            if (b[j] == b[k]) continue; // those entries live in D
            m = std::max(m, A(j, k).tail_norms(alpha).l1);
        }
    return m;
}

double SystemSpec::t_cut(double tail_eps, double alpha) const {
    double T = alpha + 1.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            T = std::max(T, A(j, k).support_bound(tail_eps));
            for (const CoeffMatrix& Ceta : C) T = std::max(T, Ceta(j, k).support_bound(tail_eps));
        }
    return T;
}

std::vector<double> SystemSpec::breakpoints() const {
    std::vector<double> out;
    auto add = [&out](const CoefficientFunction& f) {
        const std::vector<double>& b = f.breakpoints();
        out.insert(out.end(), b.begin(), b.end());
    };
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            add(A(j, k));
            for (const CoeffMatrix& Ceta : C) add(Ceta(j, k));
        }
    add(rho.decay());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-14; }),
              out.end());
    return out;
}

bool SystemSpec::all_b_distinct() const {
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
            if (b[j] == b[k]) return false;
    return true;
}

SystemSpec make_system(int n, std::vector<Complex> b, CoeffMatrix A,
                       std::vector<CoeffMatrix> C, WeightFunction rho) {
    if (n < 2) throw std::invalid_argument("system: need n >= 2");
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("system: b size mismatch");
    for (Complex v : b)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("system: non-finite b");
    if (A.size() != n) throw std::invalid_argument("system: A must be n x n");
    for (const CoeffMatrix& Ceta : C)
        if (Ceta.size() != n) throw std::invalid_argument("system: C_eta must be n x n");
    // drop trailing all-zero Laurent matrices
    while (!C.empty() && C.back().is_zero()) C.pop_back();
    SystemSpec spec;
    spec.n = n;
    spec.b = std::move(b);
    spec.A = std::move(A);
    spec.C = std::move(C);
    spec.rho = std::move(rho);
    spec.roots_of_unity = detect_roots_of_unity(spec.b);
    return spec;
}

std::vector<Complex> roots_of_unity_ordered(int n) {
    if (n < 2) throw std::invalid_argument("roots_of_unity_ordered: n >= 2");
    std::vector<Complex> b(static_cast<std::size_t>(n));
    auto unit = [n](long twist) {
        double ang = 2.0 * pi() * static_cast<double>(twist) / n;
        return Complex(snap(std::cos(ang)), snap(std::sin(ang)));
    };
    for (int s = 0; 2 * s + 1 <= n; ++s) b[static_cast<std::size_t>(2 * s)] = unit(s);
    for (int p = 1; 2 * p <= n; ++p) b[static_cast<std::size_t>(2 * p - 1)] = unit(-p);
    return b;
}

bool detect_roots_of_unity(const std::vector<Complex>& b) {
    int n = static_cast<int>(b.size());
    std::vector<bool> used(b.size(), false);
    for (int j = 0; j < n; ++j) {
        double ang = 2.0 * pi() * j / n;
        Complex root(std::cos(ang), std::sin(ang));
        bool matched = false;
        for (int k = 0; k < n; ++k) {
            if (!used[k] && std::abs(b[static_cast<std::size_t>(k)] - root) < 1e-12) {
                used[static_cast<std::size_t>(k)] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

CoeffMatrix build_D(const SystemSpec& spec) {
    CoeffMatrix D(spec.n);
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            if (spec.b[static_cast<std::size_t>(j)] == spec.b[static_cast<std::size_t>(k)])
                D(j, k) = spec.A(j, k);
    return D;
}

GammaKPhi gamma_K_phi(const SystemSpec& spec, double alpha, Complex lambda) {
    if (lambda == Complex(0.0, 0.0)) throw std::domain_error("gamma_K_phi: lambda = 0");
    GammaKPhi out;
    const std::size_t N = spec.C.size();
    double r = std::abs(lambda);
    for (std::size_t eta = 0; eta < N; ++eta) {
        double m = 0.0;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k)
                m = std::max(m, spec.C[eta](j, k).tail_norms(alpha).l1);
        out.K += m;
    }
    if (N <= 1) {
        out.gamma = out.K / r;
    } else {
        // exact entry norms of the lambda-combined coefficient
        double g = 0.0;
        for (int j = 0; j < spec.n; ++j)
            for (int k = 0; k < spec.n; ++k) {
                CoefficientFunction sum;
                Complex w(1.0, 0.0);
                for (std::size_t eta = 0; eta < N; ++eta) {
                    w /= lambda;
                    sum = sum + spec.C[eta](j, k).scaled(w);
                }
                g = std::max(g, sum.tail_norms(alpha).l1);
            }
        out.gamma = g;
    }
    double inv_alpha = (alpha > 0.0) ? 1.0 / alpha : std::numeric_limits<double>::infinity();
    if (N == 0 || out.K == 0.0)
        out.phi = inv_alpha;
    else
        out.phi = std::max(inv_alpha, std::pow(out.K, 1.0 / (2.0 * static_cast<double>(N))));
    return out;
}

double gamma_majorant(const SystemSpec& spec, double alpha, double r) {
    if (!(r > 0.0)) throw std::domain_error("gamma_majorant: need r > 0");
    double g = 0.0;
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k) {
            double acc = 0.0, w = 1.0;
            for (const CoeffMatrix& Ceta : spec.C) {
                w /= r;
                acc += Ceta(j, k).tail_norms(alpha).l1 * w;
            }
            g = std::max(g, acc);
        }
    return g;
}

SystemSpec permuted_spec(const SystemSpec& spec, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != spec.n)
        throw std::invalid_argument("permuted_spec: permutation size mismatch");
    std::vector<Complex> b(perm.size());
    CoeffMatrix A(spec.n);
    std::vector<CoeffMatrix> C(spec.C.size(), CoeffMatrix(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        b[static_cast<std::size_t>(i)] = spec.b[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        for (int j = 0; j < spec.n; ++j) {
            A(i, j) = spec.A(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
            for (std::size_t eta = 0; eta < spec.C.size(); ++eta)
                C[eta](i, j) = spec.C[eta](perm[static_cast<std::size_t>(i)],
                                           perm[static_cast<std::size_t>(j)]);
        }
    }
    return make_system(spec.n, std::move(b), std::move(A), std::move(C), spec.rho);
}

} // namespace halfline
