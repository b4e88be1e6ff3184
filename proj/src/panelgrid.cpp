#include "halfline/panelgrid.hpp"

#include <algorithm>
#include <cmath>

namespace halfline {

namespace {
constexpr std::size_t kPanelBudget = 4u << 20; // hard resource guard
}

PanelGrid::PanelGrid(const WeightFunction& rho, double alpha, double cut,
                     const std::vector<double>& x_knots, double dp_cap)
    : alpha_(alpha), cut_(cut) {
    if (!(cut > alpha)) throw std::invalid_argument("panel grid: cut <= alpha");
    if (!(dp_cap > 0.0)) throw std::invalid_argument("panel grid: dp_cap <= 0");
    p_alpha_ = rho.phase(alpha);
    p_cut_ = rho.phase(cut);

    std::vector<double> xs;
    xs.push_back(alpha);
    for (double k : x_knots)
        if (k > alpha + 1e-14 && k < cut - 1e-14) xs.push_back(k);
    xs.push_back(cut);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double a, double b) { return b - a < 1e-13; }),
             xs.end());

    std::size_t total = 0;
    for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
        double P0 = rho.phase(xs[s]), P1 = rho.phase(xs[s + 1]);
        total += static_cast<std::size_t>(std::ceil((P1 - P0) / dp_cap - 1e-12));
    }
    if (total > kPanelBudget)
        throw IntegrationError("panel grid: " + std::to_string(total) +
                               " panels exceed the resource budget");
    panels_.reserve(total + xs.size());

    const Gauss7& G = Gauss7::instance();
    for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
        double P0 = rho.phase(xs[s]), P1 = rho.phase(xs[s + 1]);
        if (!(P1 > P0)) throw std::invalid_argument("panel grid: weight not increasing");
        int m = std::max(1, static_cast<int>(std::ceil((P1 - P0) / dp_cap - 1e-12)));
        double prev_x = xs[s];
        for (int i = 0; i < m; ++i) {
            Panel pn;
            pn.p_lo = P0 + (P1 - P0) * i / m;
            pn.p_hi = (i + 1 == m) ? P1 : P0 + (P1 - P0) * (i + 1) / m;
            pn.x_lo = prev_x;
            pn.x_hi = (i + 1 == m) ? xs[s + 1] : rho.phase_inverse(pn.p_hi);
            prev_x = pn.x_hi;
            double mid = 0.5 * (pn.p_lo + pn.p_hi), half = pn.half();
            for (int g = 0; g < Gauss7::N; ++g) {
                pn.p[g] = mid + half * G.node[g];
                pn.x[g] = rho.phase_inverse(pn.p[g]);
            }
            panels_.push_back(pn);
        }
    }

    p_edges_.reserve(panels_.size() + 1);
    x_edges_.reserve(panels_.size() + 1);
    for (const Panel& pn : panels_) {
        p_edges_.push_back(pn.p_lo);
        x_edges_.push_back(pn.x_lo);
    }
    p_edges_.push_back(panels_.back().p_hi);
    x_edges_.push_back(panels_.back().x_hi);
}

int PanelGrid::find_by_p(double P) const {
    if (P <= p_edges_.front()) return 0;
    if (P >= p_edges_.back()) return count() - 1;
    auto it = std::upper_bound(p_edges_.begin(), p_edges_.end(), P);
    return static_cast<int>(it - p_edges_.begin()) - 1;
}

int PanelGrid::find_by_x(double x) const {
    if (x <= x_edges_.front()) return 0;
    if (x >= x_edges_.back()) return count() - 1;
    auto it = std::upper_bound(x_edges_.begin(), x_edges_.end(), x);
    return static_cast<int>(it - x_edges_.begin()) - 1;
}

} // namespace halfline
