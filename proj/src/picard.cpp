#include "halfline/picard.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace halfline {

ContractionInfo contraction_bound(const KernelContext& ctx, const SystemSpec& spec,
                                  int theta_samples) {
    ContractionInfo info;
    ThetaResult th = ctx.theta_hat(theta_samples);
    info.theta = th.value;
    info.theta_grid = th.grid_value;
    info.theta_tail = th.tail;
    info.kappa = ctx.kappa_sup();
    info.gamma = ctx.gamma_alpha();

    info.bound_v = ctx.v_row_sum();
    info.bound_v2 = ctx.v_total_sum() * (info.kappa + info.theta);

    double alpha = ctx.grid().alpha();
    double n = spec.n;
    double a = spec.a_const();
    double e2a = std::exp(2.0 * a);
    GammaKPhi gk = gamma_K_phi(spec, alpha, ctx.lambda());
    double gamma_at_phi =
        std::isfinite(gk.phi) && gk.phi > 0.0 ? gamma_majorant(spec, alpha, gk.phi) : 0.0;
    double K = gamma_at_phi + spec.norm_A_minus_D(alpha);
    info.bound_v_coarse = n * e2a * (info.gamma + a);
    info.bound_v2_coarse = n * n * e2a * K * (e2a * info.gamma + info.theta);

    info.ok = info.bound_v2 < 0.5;
    if (info.bound_v2 < 1.0)
        info.n_bound =
            (1.0 + info.bound_v) * (1.0 + info.bound_v2) / (1.0 - info.bound_v2);
    return info;
}

FixedPointResult solve_fixed_point(const KernelContext& ctx, const SystemSpec& spec,
                                   const BCVector& w, const Tolerances& tol) {
    FixedPointResult res;
    PicardCertificate& cert = res.cert;
    cert.lambda = ctx.lambda();
    cert.pivot0 = ctx.pivot();
    cert.omega = ctx.omega();
    cert.bound = contraction_bound(ctx, spec);

    if (!cert.bound.ok) {
        // the bound decays roughly like 1/|lambda| in the regime where it
        // still fails, which gives a usable radius hint
        double hint = std::abs(ctx.lambda()) * cert.bound.bound_v2 / 0.4;
        throw ThresholdError("fixed point: squared-operator bound " +
                                 std::to_string(cert.bound.bound_v2) + " >= 1/2",
                             cert.bound.bound_v2, hint);
    }

    cert.norm_w = w.max_abs();
    const double scale = std::max(1.0, cert.norm_w);

    res.z = w;
    BCVector delta, next;
    ctx.apply_V(w, delta); // d_0 = V w
    cert.norm_vw = delta.max_abs();

    std::vector<double> inc_norms;
    inc_norms.push_back(cert.norm_vw);

    bool converged = false;
    for (int m = 0; m < tol.iteration_cap; ++m) {
        double dn = inc_norms.back();
        if (dn <= tol.fixed_point * scale) {
            converged = true;
            cert.iterations = m + 1; // counts operator applications
            break;
        }
        // accumulate and push the increment through V once more
        for (int c = 0; c < res.z.components(); ++c)
            for (std::size_t i = 0; i < res.z.nodes(); ++i)
                res.z.at(c, i) += delta.at(c, i);
        ctx.apply_V(delta, next);
        delta = next;
        inc_norms.push_back(delta.max_abs());
    }
    if (!converged) {
        cert.iterations = tol.iteration_cap;
        cert.final_increment = inc_norms.back();
        throw DivergenceError("fixed point: iteration cap " +
                              std::to_string(tol.iteration_cap) +
                              " hit with increment " + std::to_string(inc_norms.back()));
    }

    cert.final_increment = inc_norms.back();
    cert.norm_z = res.z.max_abs();
    cert.tail_error = res.z.components() * ctx.v_tail() * cert.norm_z;

    // observed contraction of the squared operator, away from the noise floor
    double floor = std::max(tol.fixed_point * scale, 1e-13 * scale);
    for (std::size_t m = 0; m + 2 < inc_norms.size(); ++m)
        if (inc_norms[m] > floor && inc_norms[m + 2] > 0.0)
            cert.two_step_ratio =
                std::max(cert.two_step_ratio, inc_norms[m + 2] / inc_norms[m]);

    cert.converged = true;
    return res;
}

double estimate_lambda_alpha(const SystemSpec& spec, double alpha,
                             const std::vector<RayJob>& jobs, const Tolerances& tol,
                             double r_max, double r_floor) {
    if (jobs.empty()) throw std::invalid_argument("lambda_alpha: no rays");
    if (!(r_floor > 0.0) || !(r_max > r_floor))
        throw std::invalid_argument("lambda_alpha: bad search range");

    double c_phase = 0.0;
    for (const RayJob& job : jobs)
        c_phase = std::max(c_phase, phase_rate(spec.b, job.omega));

    PropagatorMatrix M(spec, alpha, tol);
    std::map<double, std::shared_ptr<const NodeTables>> cache;
    auto tables_at = [&](double level) {
        auto it = cache.find(level);
        if (it != cache.end()) return it->second;
        auto tab = make_node_tables(spec, M, dp_cap_for(level, c_phase, tol), tol);
        cache.emplace(level, tab);
        return tab;
    };

    // tables built for a level resolve any smaller |lambda| as well
    auto bound_at = [&](double r, double level, const RayJob& job) {
        KernelContext ctx(tables_at(level), job.pivot0, job.omega,
                          std::polar(r, job.arg), tol);
        return contraction_bound(ctx, spec).bound_v2;
    };
    auto ok_at = [&](double r, double level, const RayJob& job) {
        return bound_at(r, level, job) < 0.5;
    };

    std::vector<double> levels;
    for (double r = r_floor; r < r_max; r *= 2.0) levels.push_back(r);
    levels.push_back(r_max);

    double result = r_floor;
    for (const RayJob& job : jobs) {
        // largest scanned radius that fails; everything above must pass
        int fail = -1;
        for (int i = static_cast<int>(levels.size()) - 1; i >= 0; --i)
            if (!ok_at(levels[i], levels[i], job)) {
                fail = i;
                break;
            }
        if (fail == static_cast<int>(levels.size()) - 1)
            throw ThresholdError("lambda_alpha: bound still >= 1/2 at the search cap",
                                 bound_at(r_max, r_max, job), r_max);
        if (fail < 0) continue;               // floor suffices on this ray

        double lo = levels[static_cast<std::size_t>(fail)];
        double hi = levels[static_cast<std::size_t>(fail) + 1];
        for (int it = 0; it < 8; ++it) {
            double mid = std::sqrt(lo * hi);
            if (ok_at(mid, hi, job))
                hi = mid;
            else
                lo = mid;
        }
        result = std::max(result, hi);
    }
    return result;
}

} // namespace halfline
