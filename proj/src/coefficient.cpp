#include "halfline/coefficient.hpp"

#include "halfline/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace halfline {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// int_a^b (x-lo)^k e^{-beta x} dx by the integration-by-parts recurrence.
Complex poly_exp_integral(int k, double lo, double beta, double a, double b) {
    // I_0 = (e^{-beta a} - e^{-beta b})/beta
    double ea = std::exp(-beta * a);
    double eb = (b == kInf) ? 0.0 : std::exp(-beta * b);
    double I = (ea - eb) / beta;
    if (k == 0) return I;
    double pa = 1.0, pb = 1.0; // (x-lo)^j at a and b
    for (int j = 1; j <= k; ++j) {
        pa *= (a - lo);
        pb = (b == kInf) ? 0.0 : pb * (b - lo);
        // I_j = (pa*ea - pb*eb)/beta + (j/beta) I_{j-1}
        I = (pa * ea - pb * eb) / beta + (static_cast<double>(j) / beta) * I;
    }
    return I;
}

Complex eval_piece(const PolyPiece& p, double x) {
    Complex acc(0.0, 0.0);
    double t = x - p.lo;
    for (std::size_t i = p.coef.size(); i-- > 0;) acc = acc * t + p.coef[i];
    return acc;
}

Complex integrate_piece(const PolyPiece& p, double a, double b) {
    double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
    if (!(hi > lo)) return {0.0, 0.0};
    Complex acc(0.0, 0.0);
    double ta = lo - p.lo, tb = hi - p.lo;
    double pa = ta, pb = tb;
    for (std::size_t i = 0; i < p.coef.size(); ++i) {
        acc += p.coef[i] * (pb - pa) / static_cast<double>(i + 1);
        pa *= ta;
        pb *= tb;
    }
    return acc;
}

// Shift a local polynomial given by coef around `from` to the base point `to`
// (binomial expansion); used when merging pieces.
std::vector<Complex> rebase_poly(const std::vector<Complex>& coef, double from, double to) {
    // q(x) = sum_i coef[i] (x-from)^i = sum_j out[j] (x-to)^j, with s = to-from:
    // out[j] = sum_{i>=j} coef[i] C(i,j) s^{i-j}
    double s = to - from;
    std::size_t n = coef.size();
    std::vector<Complex> out(n, Complex(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double binom = 1.0; // C(i,j) built incrementally over i
        double spow = 1.0;
        for (std::size_t i = j; i < n; ++i) {
            out[j] += coef[i] * binom * spow;
            spow *= s;
            binom = binom * static_cast<double>(i + 1) / static_cast<double>(i + 1 - j);
        }
    }
    return out;
}

std::vector<Complex> multiply_polys(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    std::vector<Complex> out(a.size() + b.size() - 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

bool poly_is_zero(const std::vector<Complex>& c) {
    for (const Complex& v : c)
        if (v != Complex(0.0, 0.0)) return false;
    return true;
}

} // namespace

CoefficientFunction CoefficientFunction::exp_decay(Complex scale, double beta) {
    if (!finite(scale)) throw CoefficientError("exp_decay: non-finite scale");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("exp_decay: beta must be positive and finite");
    CoefficientFunction f;
    if (scale != Complex(0.0, 0.0)) f.exps_.push_back({scale, beta});
    f.normalize();
    return f;
}

CoefficientFunction CoefficientFunction::piecewise_poly(std::vector<PolyPiece> pieces) {
    CoefficientFunction f;
    for (PolyPiece& p : pieces) {
        if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.hi > p.lo))
            throw std::invalid_argument("piecewise_poly: need finite lo < hi");
        if (p.lo < 0.0) throw std::invalid_argument("piecewise_poly: support must lie in [0,inf)");
        for (Complex c : p.coef)
            if (!finite(c)) throw CoefficientError("piecewise_poly: non-finite coefficient");
        if (!poly_is_zero(p.coef)) f.pieces_.push_back(std::move(p));
    }
    f.normalize();
    return f;
}

CoefficientFunction CoefficientFunction::tabulated(const std::vector<double>& knots,
                                                   const std::vector<Complex>& values) {
    if (knots.size() != values.size() || knots.size() < 2)
        throw std::invalid_argument("tabulated: need matching knots/values, at least two");
    if (knots.front() < 0.0) throw std::invalid_argument("tabulated: knots must lie in [0,inf)");
    std::vector<PolyPiece> pieces;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (!(knots[i + 1] > knots[i]))
            throw std::invalid_argument("tabulated: knots must be strictly increasing");
        if (!finite(values[i]) || !finite(values[i + 1]))
            throw CoefficientError("tabulated: non-finite value");
        Complex slope = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
        pieces.push_back({knots[i], knots[i + 1], {values[i], slope}});
    }
    return piecewise_poly(std::move(pieces));
}

void CoefficientFunction::normalize() {
    // merge exponential terms with equal rates
    std::sort(exps_.begin(), exps_.end(),
              [](const ExpTerm& a, const ExpTerm& b) { return a.beta < b.beta; });
    std::vector<ExpTerm> merged;
    for (const ExpTerm& t : exps_) {
        if (!merged.empty() && merged.back().beta == t.beta)
            merged.back().scale += t.scale;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const ExpTerm& t) { return t.scale == Complex(0.0, 0.0); }),
                 merged.end());
    exps_ = std::move(merged);

    std::sort(pieces_.begin(), pieces_.end(),
              [](const PolyPiece& a, const PolyPiece& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
        if (pieces_[i].hi > pieces_[i + 1].lo + 1e-15)
            throw std::invalid_argument("coefficient pieces overlap");

    breaks_.clear();
    for (const PolyPiece& p : pieces_) {
        breaks_.push_back(p.lo);
        breaks_.push_back(p.hi);
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                  breaks_.end());
}

Complex CoefficientFunction::operator()(double x) const {
    Complex acc(0.0, 0.0);
    for (const ExpTerm& t : exps_) acc += t.scale * std::exp(-t.beta * x);
    for (const PolyPiece& p : pieces_) {
        if (x >= p.lo && x < p.hi) {
            acc += eval_piece(p, x);
            break;
        }
    }
    if (!finite(acc)) throw CoefficientError("coefficient evaluated to a non-finite value");
    return acc;
}

Complex CoefficientFunction::integrate(double a, double b) const {
    if (!(b > a)) return {0.0, 0.0};
    Complex acc(0.0, 0.0);
    for (const ExpTerm& t : exps_) {
        double eb = (b == kInf) ? 0.0 : std::exp(-t.beta * b);
        acc += t.scale * (std::exp(-t.beta * a) - eb) / t.beta;
    }
    for (const PolyPiece& p : pieces_) acc += integrate_piece(p, a, b);
    return acc;
}

TailNorms CoefficientFunction::tail_norms(double alpha, double tol) const {
    TailNorms out;
    if (is_zero()) return out;

    // L2 is assembled exactly: |f|^2 = f conj(f) expands into exp*exp,
    // piece*piece and exp*piece products, each with a closed-form integral.
    double l2sq = 0.0;
    for (const ExpTerm& s : exps_)
        for (const ExpTerm& t : exps_) {
            double rate = s.beta + t.beta;
            l2sq += (s.scale * std::conj(t.scale)).real() * std::exp(-rate * alpha) / rate;
        }
    for (const PolyPiece& p : pieces_) {
        // |p(x)|^2 = sum_{i,j} c_i conj(c_j) (x-lo)^{i+j}
        double lo = std::max(alpha, p.lo);
        if (!(p.hi > lo)) continue;
        double ta = lo - p.lo, tb = p.hi - p.lo;
        for (std::size_t i = 0; i < p.coef.size(); ++i)
            for (std::size_t j = 0; j < p.coef.size(); ++j) {
                double k = static_cast<double>(i + j + 1);
                double re = (p.coef[i] * std::conj(p.coef[j])).real();
                l2sq += re * (std::pow(tb, k) - std::pow(ta, k)) / k;
            }
    }
    for (const ExpTerm& t : exps_)
        for (const PolyPiece& p : pieces_) {
            double lo = std::max(alpha, p.lo);
            if (!(p.hi > lo)) continue;
            Complex cross(0.0, 0.0);
            for (std::size_t i = 0; i < p.coef.size(); ++i)
                cross += std::conj(p.coef[i]) *
                         poly_exp_integral(static_cast<int>(i), p.lo, t.beta, lo, p.hi);
            l2sq += 2.0 * (t.scale * cross).real();
        }
    out.l2 = std::sqrt(std::max(0.0, l2sq));
    out.l2_error = 1e-15 * (1.0 + out.l2);

    // L1: closed form for a single exponential term, quadrature otherwise.
    if (pieces_.empty() && exps_.size() == 1) {
        const ExpTerm& t = exps_.front();
        out.l1 = std::abs(t.scale) * std::exp(-t.beta * alpha) / t.beta;
        out.l1_error = 1e-15 * (1.0 + out.l1);
        return out;
    }
    double cut = support_bound(std::min(tol, 1e-13));
    if (cut > alpha) {
        auto f = [this](double x) { return std::abs((*this)(x)); };
        QuadResult q = integrate_adaptive(f, alpha, cut, breaks_, tol);
        out.l1 = q.value;
        out.l1_error = q.error;
    }
    double tail = 0.0;
    for (const ExpTerm& t : exps_)
        tail += std::abs(t.scale) * std::exp(-t.beta * std::max(alpha, cut)) / t.beta;
    out.l1 += tail;
    out.l1_error += tail + tol;
    return out;
}

double CoefficientFunction::support_bound(double eps) const {
    double T = 0.0;
    for (const PolyPiece& p : pieces_) T = std::max(T, p.hi);
    if (exps_.empty()) return T;
    double n = static_cast<double>(exps_.size());
    for (const ExpTerm& t : exps_) {
        double mass = std::abs(t.scale) / t.beta;
        if (mass <= eps / n) continue;
        T = std::max(T, std::log(mass * n / eps) / t.beta);
    }
    return T;
}

CoefficientFunction CoefficientFunction::scaled(Complex c) const {
    CoefficientFunction out;
    if (c == Complex(0.0, 0.0)) return out;
    out.exps_ = exps_;
    for (ExpTerm& t : out.exps_) t.scale *= c;
    out.pieces_ = pieces_;
    for (PolyPiece& p : out.pieces_)
        for (Complex& v : p.coef) v *= c;
    out.normalize();
    return out;
}

CoefficientFunction CoefficientFunction::squared() const {
    if (!exps_.empty() && !pieces_.empty())
        throw CoefficientError("squared: mixed exponential/polynomial sums are not closed");
    CoefficientFunction out;
    for (const ExpTerm& s : exps_)
        for (const ExpTerm& t : exps_) out.exps_.push_back({s.scale * t.scale, s.beta + t.beta});
    for (const PolyPiece& p : pieces_) {
        // distinct pieces have disjoint support, so cross products vanish
        out.pieces_.push_back({p.lo, p.hi, multiply_polys(p.coef, p.coef)});
    }
    out.normalize();
    return out;
}

CoefficientFunction operator+(const CoefficientFunction& a, const CoefficientFunction& b) {
    CoefficientFunction out;
    out.exps_ = a.exps_;
    out.exps_.insert(out.exps_.end(), b.exps_.begin(), b.exps_.end());

    // merge piece lists on the union of breakpoints
    std::vector<double> cuts;
    for (const PolyPiece& p : a.pieces_) {
        cuts.push_back(p.lo);
        cuts.push_back(p.hi);
    }
    for (const PolyPiece& p : b.pieces_) {
        cuts.push_back(p.lo);
        cuts.push_back(p.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto local = [](const std::vector<PolyPiece>& pieces, double lo, double hi)
        -> std::vector<Complex> {
        for (const PolyPiece& p : pieces)
            if (p.lo <= lo + 1e-15 && p.hi >= hi - 1e-15) return rebase_poly(p.coef, p.lo, lo);
        return {};
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        std::vector<Complex> pa = local(a.pieces_, lo, hi);
        std::vector<Complex> pb = local(b.pieces_, lo, hi);
        if (pa.empty() && pb.empty()) continue;
        std::vector<Complex> sum(std::max(pa.size(), pb.size()), Complex(0.0, 0.0));
        for (std::size_t j = 0; j < pa.size(); ++j) sum[j] += pa[j];
        for (std::size_t j = 0; j < pb.size(); ++j) sum[j] += pb[j];
        if (!poly_is_zero(sum)) out.pieces_.push_back({lo, hi, std::move(sum)});
    }
    out.normalize();
    return out;
}

bool CoefficientFunction::is_real() const {
    for (const ExpTerm& t : exps_)
        if (t.scale.imag() != 0.0) return false;
    for (const PolyPiece& p : pieces_)
        for (Complex c : p.coef)
            if (c.imag() != 0.0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// WeightFunction
// ---------------------------------------------------------------------------

WeightFunction WeightFunction::constant(double c) {
    WeightFunction w;
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("weight: constant part must be positive");
    w.c_inf_ = c;
    return w;
}

WeightFunction::WeightFunction(double c_inf, CoefficientFunction decay)
    : c_inf_(c_inf), decay_(std::move(decay)) {
    if (!(c_inf >= 0.0) || !std::isfinite(c_inf))
        throw std::invalid_argument("weight: constant part must be >= 0");
    if (!decay_.is_real()) throw std::invalid_argument("weight: decay part must be real-valued");
    if (c_inf == 0.0 && decay_.is_zero())
        throw std::invalid_argument("weight: identically zero");
    double hi = decay_.support_bound(1e-12) + 1.0;
    for (int i = 0; i <= 4096; ++i) {
        double x = hi * i / 4096.0;
        if (!((*this)(x) > 0.0))
            throw std::invalid_argument("weight: must be positive on [0,inf)");
    }
}

double WeightFunction::operator()(double x) const { return c_inf_ + decay_(x).real(); }

double WeightFunction::phase(double x) const {
    return c_inf_ * x + decay_.integrate(0.0, x).real();
}

double WeightFunction::total_mass() const {
    if (c_inf_ > 0.0) return kInf;
    return decay_.integrate(0.0, kInf).real();
}

double WeightFunction::phase_inverse(double y) const {
    if (y < 0.0) throw std::out_of_range("phase_inverse: negative phase");
    if (y == 0.0) return 0.0;
    if (decay_.is_zero()) return y / c_inf_; // p(x) = c x
    if (finite_mass() && y >= total_mass() * (1.0 - 1e-14))
        throw std::out_of_range("phase_inverse: phase above the asymptotic range of p");
    double hi = 1.0;
    int guard = 0;
    while (phase(hi) < y) {
        hi *= 2.0;
        if (++guard > 200) throw std::out_of_range("phase_inverse: bracket search failed");
    }
    double lo = 0.0;
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        (phase(mid) < y ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    double r = (*this)(x);
    if (r > 0.0) {
        double xn = x - (phase(x) - y) / r; // one Newton polish
        if (xn >= lo && xn <= hi) x = xn;
    }
    return x;
}

double WeightFunction::essinf(double a, double b) const {
    double support = decay_.support_bound(1e-12);
    double inf_val = kInf;
    if (b > support) {
        inf_val = c_inf_; // decay part vanishes beyond its support
        b = std::min(b, support);
    }
    if (b > a) {
        for (int i = 0; i <= 4096; ++i) {
            double x = a + (b - a) * i / 4096.0;
            inf_val = std::min(inf_val, (*this)(x));
        }
    } else if (inf_val == kInf) {
        inf_val = (*this)(a);
    }
    return inf_val;
}

} // namespace halfline
