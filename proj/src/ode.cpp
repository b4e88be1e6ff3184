#include "halfline/ode.hpp"

#include <algorithm>
#include <cmath>

namespace halfline {

namespace {

// Dormand-Prince 5(4) tableau.
const double A21 = 1.0 / 5;
const double A31 = 3.0 / 40, A32 = 9.0 / 40;
const double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
const double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
             A54 = -212.0 / 729;
const double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
             A65 = -5103.0 / 18656;
const double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
             B6 = 11.0 / 84;
const double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
             E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
             E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

} // namespace

Eigen::VectorXcd DenseSolution::eval(double x) const {
    if (xs_.empty()) throw IntegrationError("dense eval on empty solution");
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    double h = xs_[i + 1] - xs_[i];
    double t = (x - xs_[i]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * ys_[i] + (h10 * h) * fs_[i] + h01 * ys_[i + 1] + (h11 * h) * fs_[i + 1];
}

DenseSolution integrate_dense(
    const std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)>& f,
    Eigen::VectorXcd y0, double x0, double x1, double tol,
    const std::vector<double>& forced, double hmax) {
    DenseSolution sol;
    const double dir = (x1 >= x0) ? 1.0 : -1.0;
    const double span = std::abs(x1 - x0);
    if (span == 0.0) {
        Eigen::VectorXcd k(y0.size());
        f(x0, y0, k);
        sol.xs_ = {x0};
        sol.ys_ = {y0};
        sol.fs_ = {k};
        return sol;
    }
    if (hmax <= 0.0) hmax = span;

    std::vector<double> stops;
    for (double s : forced)
        if ((s - x0) * dir > 1e-14 && (x1 - s) * dir > 1e-14) stops.push_back(s);
    stops.push_back(x1);
    std::sort(stops.begin(), stops.end());
    if (dir < 0) std::reverse(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    const Eigen::Index n = y0.size();
    Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

    double x = x0;
    Eigen::VectorXcd y = std::move(y0);
    f(x, y, k1);
    sol.xs_.push_back(x);
    sol.ys_.push_back(y);
    sol.fs_.push_back(k1);

    double h = dir * std::min(hmax, span / 16.0);
    std::size_t next_stop = 0;
    long guard = 0;
    while (next_stop < stops.size()) {
        if (++guard > 4000000) throw IntegrationError("ode: step budget exhausted");
        double target = stops[next_stop];
        bool clipped = false;
        if ((x + h - target) * dir >= 0.0) {
            h = target - x;
            clipped = true;
        }
        if (std::abs(h) < 1e-14 * (1.0 + std::abs(x))) {
            // fell exactly onto the stop
            x = target;
            ++next_stop;
            h = dir * std::min(hmax, span / 16.0);
            continue;
        }

        f(x, y, k1);
        ytmp = y + h * (A21 * k1);
        f(x + h / 5.0, ytmp, k2);
        ytmp = y + h * (A31 * k1 + A32 * k2);
        f(x + 3.0 * h / 10.0, ytmp, k3);
        ytmp = y + h * (A41 * k1 + A42 * k2 + A43 * k3);
        f(x + 4.0 * h / 5.0, ytmp, k4);
        ytmp = y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4);
        f(x + 8.0 * h / 9.0, ytmp, k5);
        ytmp = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5);
        f(x + h, ytmp, k6);
        ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        f(x + h, ynew, k7);
        yerr = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double scale = tol * (1.0 + std::max(std::abs(y[i]), std::abs(ynew[i])));
            err = std::max(err, std::abs(yerr[i]) / scale);
        }

        if (err <= 1.0) {
            x += h;
            y = ynew;
            sol.xs_.push_back(x);
            sol.ys_.push_back(y);
            sol.fs_.push_back(k7);
            if (clipped) {
                x = target; // guard against roundoff drift
                sol.xs_.back() = x;
                ++next_stop;
            }
        }
        double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::min(5.0, std::max(0.2, fac));
        h *= fac;
        if (std::abs(h) > hmax) h = dir * hmax;
        if (std::abs(h) < 1e-14 * (1.0 + std::abs(x)))
            throw IntegrationError("ode: step size underflow");
    }

    if (dir < 0) {
        std::reverse(sol.xs_.begin(), sol.xs_.end());
        std::reverse(sol.ys_.begin(), sol.ys_.end());
        std::reverse(sol.fs_.begin(), sol.fs_.end());
    }
    return sol;
}

} // namespace halfline
