#include "halfline/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace halfline {

namespace {

struct SimpsonState {
    const std::function<double(double)>* f;
    double tol_total;
    double length_total;
};

// Classic adaptive Simpson with Richardson correction; error estimates are
// summed rather than maxed so the reported bound stays conservative.
QuadResult simpson_rec(const SimpsonState& st, double a, double b, double fa, double fm,
                       double fb, double whole, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = (*st.f)(lm), frm = (*st.f)(rm);
    double h = b - a;
    double left = h / 12.0 * (fa + 4.0 * flm + fm);
    double right = h / 12.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    double local_tol = st.tol_total * (h / st.length_total);
    if (depth <= 0 || std::abs(delta) <= 15.0 * local_tol) {
        QuadResult r;
        r.value = left + right + delta / 15.0;
        r.error = std::abs(delta) / 15.0;
        return r;
    }
    QuadResult rl = simpson_rec(st, a, m, fa, flm, fm, left, depth - 1);
    QuadResult rr = simpson_rec(st, m, b, fm, frm, fb, right, depth - 1);
    return {rl.value + rr.value, rl.error + rr.error};
}

} // namespace

QuadResult simpson_adaptive(const std::function<double(double)>& f, double a, double b,
                            double tol, int max_depth) {
    if (!(b > a)) return {0.0, 0.0};
    SimpsonState st{&f, std::max(tol, 1e-300), b - a};
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(st, a, b, fa, fm, fb, whole, max_depth);
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& breakpoints, double tol) {
    if (!(b > a)) return {0.0, 0.0};
    std::vector<double> pts;
    pts.push_back(a);
    for (double t : breakpoints)
        if (t > a && t < b) pts.push_back(t);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    QuadResult total;
    double per = tol / static_cast<double>(pts.size());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] - pts[i] < 1e-15) continue;
        QuadResult r = simpson_adaptive(f, pts[i], pts[i + 1], per);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

} // namespace halfline
