#pragma once

#include "halfline/coefficient.hpp"
#include "halfline/gauss.hpp"
#include "halfline/types.hpp"

#include <vector>

namespace halfline {

/// Quadrature panel in phase coordinates P = p(x).  Nodes are the 7-point
/// Gauss rule in P; integrals in t translate to integrals in P against
/// values of f/rho at the x-images of the nodes.
struct Panel {
    double p_lo = 0.0, p_hi = 0.0;
    double x_lo = 0.0, x_hi = 0.0;
    std::array<double, Gauss7::N> p{};
    std::array<double, Gauss7::N> x{};

    double dp() const { return p_hi - p_lo; }
    double half() const { return 0.5 * (p_hi - p_lo); }
};

// ---------------------------------------------------------------------------
// Partition of [alpha, cut] into panels uniform in P between coefficient
// knots, with panel length capped at dp_cap phase units.  The cap keeps the
// oscillation of every kernel exponential below a fixed budget per panel, so
// the degree-6 panel interpolants stay uniformly accurate in lambda.
// ---------------------------------------------------------------------------
class PanelGrid {
public:
    PanelGrid(const WeightFunction& rho, double alpha, double cut,
              const std::vector<double>& x_knots, double dp_cap);

    const std::vector<Panel>& panels() const { return panels_; }
    int count() const { return static_cast<int>(panels_.size()); }
    std::size_t node_count() const { return panels_.size() * Gauss7::N; }

    double alpha() const { return alpha_; }
    double cut() const { return cut_; }
    double p_alpha() const { return p_alpha_; }
    double p_cut() const { return p_cut_; }

    /// Index of the panel whose closed P-range contains P (clamped to ends).
    int find_by_p(double P) const;
    int find_by_x(double x) const;

    static std::size_t node_index(int panel, int g) {
        return static_cast<std::size_t>(panel) * Gauss7::N + g;
    }

private:
    double alpha_, cut_, p_alpha_, p_cut_;
    std::vector<Panel> panels_;
    std::vector<double> p_edges_; // size count()+1
    std::vector<double> x_edges_;
};

} // namespace halfline
