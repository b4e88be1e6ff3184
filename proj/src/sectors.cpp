#include "halfline/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace halfline {

namespace {

std::vector<int> ordering_at(const std::vector<Complex>& b, double angle) {
    Complex lam = std::polar(1.0, angle);
    std::vector<int> perm(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) perm[i] = static_cast<int>(i);
    std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) {
        return (lam * b[static_cast<std::size_t>(i)]).real() >
               (lam * b[static_cast<std::size_t>(j)]).real() + 0.0;
    });
    return perm;
}

void verify_constancy(const std::vector<Complex>& b, const Sector& s) {
    // the sorted order must hold weakly at both closure endpoints
    for (double ang : {s.arc.lo, s.arc.midpoint(), s.arc.hi}) {
        Complex lam = std::polar(1.0, ang);
        for (std::size_t i = 0; i + 1 < s.perm.size(); ++i) {
            double a = (lam * b[static_cast<std::size_t>(s.perm[i])]).real();
            double c = (lam * b[static_cast<std::size_t>(s.perm[i + 1])]).real();
            if (a < c - 1e-10) throw std::logic_error("sector ordering not constant on closure");
        }
    }
}

} // namespace

const Sector& SectorGeometry::locate(Complex lambda) const {
    if (lambda == Complex(0.0, 0.0)) throw std::domain_error("locate: lambda = 0");
    for (const Sector& s : sectors)
        if (s.arc.contains_open(lambda)) return s;
    for (const Sector& s : sectors)
        if (s.arc.contains_closure(lambda)) return s;
    throw std::logic_error("locate: sectors do not cover the plane");
}

const Sector& SectorGeometry::by_kappa(int kappa) const {
    for (const Sector& s : sectors)
        if (s.kappa == kappa) return s;
    throw std::out_of_range("by_kappa: no such sector");
}

SectorGeometry compute_sectors(const std::vector<Complex>& b) {
    SectorGeometry geo;
    const double half_pi = 0.5 * pi();

    std::vector<double> rays; // boundary directions in [0, pi)
    for (std::size_t j = 0; j < b.size(); ++j)
        for (std::size_t l = j + 1; l < b.size(); ++l) {
            Complex d = b[j] - b[l];
            if (d == Complex(0.0, 0.0)) continue;
            double th = half_pi - std::arg(d); // Re(e^{i th} d) = 0
            while (th < 0.0) th += pi();
            while (th >= pi() - 5e-13) th -= pi();
            rays.push_back(th);
        }
    std::sort(rays.begin(), rays.end());
    rays.erase(std::unique(rays.begin(), rays.end(),
                           [](double a, double c) { return std::abs(a - c) < 1e-12; }),
               rays.end());

    if (rays.empty()) {
        Sector s;
        s.kappa = 1;
        s.arc = AngularInterval::full();
        s.perm.resize(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) s.perm[i] = static_cast<int>(i);
        geo.sectors.push_back(std::move(s));
        geo.full_plane = true;
        return geo;
    }

    std::vector<double> bounds;
    for (double r : rays) {
        bounds.push_back(r);
        bounds.push_back(r + pi());
    }
    std::sort(bounds.begin(), bounds.end());

    // start enumeration at the sector containing arg = 0+
    double start = (std::abs(bounds.front()) < 1e-12) ? 0.0 : bounds.back() - 2.0 * pi();
    std::vector<double> cuts;
    cuts.push_back(start);
    for (double r : bounds)
        if (r > start + 1e-12 && r < start + 2.0 * pi() - 1e-12) cuts.push_back(r);
    cuts.push_back(start + 2.0 * pi());

    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Sector s;
        s.kappa = static_cast<int>(i) + 1;
        s.arc = {cuts[i], cuts[i + 1], false};
        s.perm = ordering_at(b, s.arc.midpoint());
        verify_constancy(b, s);
        geo.sectors.push_back(std::move(s));
    }
    return geo;
}

SectorGeometry formula_sectors(int n) {
    if (n < 2) throw std::invalid_argument("formula_sectors: n >= 2");
    std::vector<Complex> b = roots_of_unity_ordered(n);
    SectorGeometry geo;
    for (int kappa = 1; kappa <= 2 * n; ++kappa) {
        Sector s;
        s.kappa = kappa;
        s.arc = {pi() * (kappa - 1) / n, pi() * kappa / n, false};
        s.perm = ordering_at(b, s.arc.midpoint());
        verify_constancy(b, s);
        geo.sectors.push_back(std::move(s));
    }
    return geo;
}

LargeSectorData large_sector(const SystemSpec& spec, int m) {
    const int n = spec.n;
    if (m < 2 || m > n) throw std::invalid_argument("large_sector: need 2 <= m <= n");
    if (!spec.roots_of_unity)
        throw std::invalid_argument("large_sector: b must be the n-th roots of unity");
    const std::vector<Complex> canon = roots_of_unity_ordered(n);
    for (int j = 0; j < n; ++j)
        if (std::abs(spec.b[static_cast<std::size_t>(j)] - canon[static_cast<std::size_t>(j)]) >
            1e-12)
            throw std::invalid_argument("large_sector: b must use the canonical numbering");

    LargeSectorData L;
    L.n = n;
    L.m = m;
    const double sgn = (m % 2 == 0) ? -1.0 : 1.0; // (-1)^{m-1}
    L.sigma = (m % 2 == 0) ? 2 * n : 2;
    L.omega_region = {(sgn - 1.0) * pi() / (2.0 * n), (sgn + 3.0) * pi() / (2.0 * n), false};
    L.lambda_region = {sgn * pi() / (2.0 * n), sgn * pi() / (2.0 * n) + pi() / n, false};
    L.gamma1 = {0.0, pi() / n, false};
    L.gammasigma = {pi() * (L.sigma - 1) / n, pi() * L.sigma / n, false};
    const Complex bm = spec.b[static_cast<std::size_t>(m - 1)];
    L.omega_mid = bm * std::polar(1.0, -sgn * pi() / n); // (-1)^m = -sgn
    L.omega_gamma1 = bm;
    L.omega_gammasigma = (m < n) ? spec.b[static_cast<std::size_t>(m)] : spec.b[static_cast<std::size_t>(n - 1)];
    return L;
}

OrderingCheck check_ordering(const std::vector<Complex>& b, int pivot0, Complex omega,
                             Complex lambda, double slack_tol) {
    if (lambda == Complex(0.0, 0.0)) throw std::domain_error("check_ordering: lambda = 0");
    if (pivot0 < 0 || pivot0 >= static_cast<int>(b.size()))
        throw std::out_of_range("check_ordering: pivot");
    OrderingCheck r;
    double re_omega = (lambda * omega).real();
    double slack = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(b.size()); ++j) {
        double re = (lambda * b[static_cast<std::size_t>(j)]).real();
        slack = std::min(slack, (j < pivot0) ? re - re_omega : re_omega - re);
    }
    r.min_slack = slack;
    r.ok = slack >= -slack_tol;
    return r;
}

} // namespace halfline
