#pragma once

#include "halfline/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace halfline {

/// Dense ODE trajectory: accepted nodes plus derivative values, evaluated
/// between nodes by cubic Hermite interpolation.  Nodes are stored with
/// strictly increasing x regardless of integration direction.
class DenseSolution {
public:
    Eigen::VectorXcd eval(double x) const;
    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }
    const std::vector<double>& nodes() const { return xs_; }

private:
    friend DenseSolution integrate_dense(
        const std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)>&,
        Eigen::VectorXcd, double, double, double, const std::vector<double>&, double);

    std::vector<double> xs_;
    std::vector<Eigen::VectorXcd> ys_;
    std::vector<Eigen::VectorXcd> fs_;
};

/// Adaptive Dormand-Prince 5(4) for complex linear systems.  `forced` lists
/// x-values the stepper must land on exactly (coefficient breakpoints);
/// `hmax` caps the step so the Hermite interpolant stays accurate.
DenseSolution integrate_dense(
    const std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)>& f,
    Eigen::VectorXcd y0, double x0, double x1, double tol,
    const std::vector<double>& forced = {}, double hmax = 0.0);

} // namespace halfline
