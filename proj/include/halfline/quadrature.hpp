#pragma once

#include <functional>
#include <vector>

namespace halfline {

struct QuadResult {
    double value = 0.0;
    double error = 0.0; ///< accumulated error estimate (conservative)
};

/// Adaptive Simpson on [a,b] with absolute tolerance.  The integrand must be
/// finite; kinks are handled by recursion depth alone, so pass breakpoints
/// via integrate_adaptive when they are known.
QuadResult simpson_adaptive(const std::function<double(double)>& f, double a, double b,
                            double tol, int max_depth = 40);

/// Splits [a,b] at the supplied interior breakpoints before going adaptive.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& breakpoints, double tol);

} // namespace halfline
