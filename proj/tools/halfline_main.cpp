// Batch front-end: loads a scenario document, runs one of the pipelines
// (sectors | fss | largesector | sturm | sweep-theta | verify), and writes
// CSV/JSON artifacts with deterministic content.  Exit codes: 0 success,
// 1 failed certificate (contraction threshold, degeneracy), 2 configuration
// or schema violation, 3 numerical failure (divergence, integration error,
// residual above tolerance).

#include "halfline/picard.hpp"
#include "halfline/scenario.hpp"
#include "halfline/solutions.hpp"
#include "halfline/sturm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace halfline;

namespace {

// Residual / defect thresholds the verification pipeline enforces.
constexpr double kIntegralResidualTol = 1e-7;
constexpr double kDetUnitTol = 1e-6;
constexpr double kQuasiDefectTol = 1e-6;
constexpr double kRegularizedScale = 1e-6; // times max(1, |z|^2)

struct Options {
    std::string config;
    int jobs = 1;
    std::string out = ".";
    std::vector<std::string> tol_overrides;
};

// ---------------------------------------------------------------------------
// Deterministic fan-out: tasks indexed 0..count-1 run on `jobs` threads;
// results land in caller-owned slots, the first (by index) failure is
// rethrown after all workers join, and all emission happens afterwards in
// index order, so output never depends on scheduling.
// ---------------------------------------------------------------------------
void run_indexed(int jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    int width = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    pool.reserve(static_cast<std::size_t>(width));
    for (int t = 0; t < width; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    for (std::size_t i = 0; i < count; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------
class CsvFile {
public:
    CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
        f_.open(path, std::ios::binary | std::ios::trunc);
        if (!f_) throw ConfigError("cannot open output file " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) f_ << ',';
            f_ << header[i];
        }
        f_ << '\n';
        cols_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("csv row arity mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) f_ << ',';
            f_ << cells[i];
        }
        f_ << '\n';
    }

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream f_;
    std::size_t cols_ = 0;
};

void write_json(const fs::path& path, const json& doc) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open output file " + path.string());
    f << doc.dump(2) << '\n';
}

std::string num(double v) { return csv_num(v); }

json complex_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

// The geometry the builders validate against: the canonical 2n-wedge
// decomposition for roots-of-unity systems (also for n = 2), the ray-cut
// decomposition otherwise.
SectorGeometry pipeline_geometry(const SystemSpec& spec) {
    return spec.roots_of_unity ? formula_sectors(spec.n) : compute_sectors(spec.b);
}

// ---------------------------------------------------------------------------
// sectors: decomposition of the spectral plane as JSON-lines, echoed to
// stdout and written next to the other artifacts.  For roots-of-unity
// systems the neighboring-sector (large sector) data follows the sector
// lines.
// ---------------------------------------------------------------------------
int cmd_sectors(const Scenario& sc, const Options& opt) {
    SystemSpec spec = sc.system ? *sc.system : reduce_pencil(*sc.pencil);
    SectorGeometry geo = pipeline_geometry(spec);

    std::vector<std::string> lines;
    for (const Sector& s : geo.sectors) {
        json line;
        line["kappa"] = s.kappa;
        line["beta_lo"] = s.arc.lo;
        line["beta_hi"] = s.arc.hi;
        json perm = json::array();
        for (int p : s.perm) perm.push_back(p + 1); // 1-based in documents
        line["permutation"] = perm;
        lines.push_back(line.dump());
    }
    if (spec.roots_of_unity && spec.n > 2) {
        for (int m = 2; m <= spec.n; ++m) {
            LargeSectorData ls = large_sector(spec, m);
            json line;
            line["m"] = ls.m;
            line["sigma"] = ls.sigma;
            line["omega_lo"] = ls.omega_region.lo;
            line["omega_hi"] = ls.omega_region.hi;
            line["lambda_lo"] = ls.lambda_region.lo;
            line["lambda_hi"] = ls.lambda_region.hi;
            line["omega_mid"] = complex_json(ls.omega_mid);
            lines.push_back(line.dump());
        }
    }

    fs::path path = fs::path(opt.out) / (sc.out_prefix + "-sectors.jsonl");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open output file " + path.string());
    for (const std::string& l : lines) {
        f << l << '\n';
        std::cout << l << '\n';
    }
    std::cerr << "wrote " << path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// fss: build the fundamental system for every (alpha, sector, lambda) in the
// plan; emit per-column certificates as CSV and per-system summaries (with
// the independent integral-equation re-check) as JSON.
// ---------------------------------------------------------------------------
struct FssTask {
    double alpha = 0.0;
    int kappa = 0; // 0: locate from lambda
    Complex lambda;
    // results
    int kappa_used = 0;
    Complex det;
    double integral_residual = 0.0;
    Eigen::MatrixXd res_sup;
    std::vector<SolutionColumn> columns; // certificates only; left parts dropped
};

std::vector<FssTask> make_lambda_tasks(const Scenario& sc) {
    std::vector<FssTask> tasks;
    for (double alpha : sc.alphas)
        for (Complex lambda : sc.lambda_samples()) {
            if (sc.plan.kappas.empty()) {
                tasks.push_back({alpha, 0, lambda, 0, {}, 0.0, {}, {}});
            } else {
                for (int kappa : sc.plan.kappas)
                    tasks.push_back({alpha, kappa, lambda, 0, {}, 0.0, {}, {}});
            }
        }
    return tasks;
}

int cmd_fss(const Scenario& sc, const Options& opt) {
    if (!sc.system) throw ConfigError("fss requires a system scenario");
    const SystemSpec& spec = *sc.system;
    SectorGeometry geo = pipeline_geometry(spec);

    std::vector<FssTask> tasks = make_lambda_tasks(sc);
    run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
        FssTask& t = tasks[i];
        t.kappa_used = t.kappa ? t.kappa : geo.locate(t.lambda).kappa;
        SolutionSystem sys = build_fss(spec, t.alpha, t.kappa_used, t.lambda, sc.tol);
        t.det = sys.det_at_alpha();
        t.integral_residual = verify_integral_residual(sys, 4, sc.tol);
        t.res_sup = extract_residuals(sys).sup;
        t.columns = std::move(sys.columns);
        for (SolutionColumn& c : t.columns) c.left = DenseSolution();
    });

    CsvFile csv(fs::path(opt.out) / (sc.out_prefix + "-fss.csv"),
                {"alpha", "lambda_re", "lambda_im", "kappa", "k", "b_re", "b_im",
                 "omega_re", "omega_im", "pivot", "iterations", "final_increment",
                 "bound_v", "bound_v2", "theta", "gamma", "residual_sup", "env_sup"});
    json systems = json::array();
    bool residual_ok = true;
    for (const FssTask& t : tasks) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const SolutionColumn& col = t.columns[c];
            csv.row({num(t.alpha), num(t.lambda.real()), num(t.lambda.imag()),
                     std::to_string(t.kappa_used), std::to_string(col.k_orig + 1),
                     num(col.b_k.real()), num(col.b_k.imag()), num(col.omega.real()),
                     num(col.omega.imag()), std::to_string(col.pivot0 + 1),
                     std::to_string(col.cert.iterations), num(col.cert.final_increment),
                     num(col.cert.bound.bound_v), num(col.cert.bound.bound_v2),
                     num(col.cert.bound.theta), num(col.cert.bound.gamma),
                     num(t.res_sup.col(static_cast<Eigen::Index>(c)).maxCoeff()),
                     num(col.env_sup)});
        }
        json s;
        s["alpha"] = t.alpha;
        s["lambda"] = complex_json(t.lambda);
        s["kappa"] = t.kappa_used;
        s["det"] = complex_json(t.det);
        s["integral_residual"] = t.integral_residual;
        s["pass"] = t.integral_residual < kIntegralResidualTol;
        if (t.integral_residual >= kIntegralResidualTol) residual_ok = false;
        systems.push_back(s);
    }
    json report;
    report["scenario"] = sc.name;
    report["command"] = "fss";
    if (sc.seed) report["seed"] = *sc.seed;
    report["integral_residual_tol"] = kIntegralResidualTol;
    report["systems"] = systems;
    report["ok"] = residual_ok;
    write_json(fs::path(opt.out) / (sc.out_prefix + "-fss-report.json"), report);
    std::cerr << "wrote " << csv.path().string() << '\n';
    if (!residual_ok) {
        std::cerr << "fss: integral residual above " << kIntegralResidualTol << '\n';
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// largesector: for roots-of-unity systems, build the neighboring-sector
// family m..n for every (alpha, m, lambda), supplement it with the first
// m-1 fundamental columns, and certify residuals plus the joint determinant.
// ---------------------------------------------------------------------------
struct LargeTask {
    double alpha = 0.0;
    int m = 0;
    Complex lambda;
    // results
    std::string side;
    Complex det_supp;
    double integral_residual = 0.0;
    Eigen::MatrixXd res_sup;
    std::vector<SolutionColumn> columns;
};

int cmd_largesector(const Scenario& sc, const Options& opt) {
    if (!sc.system) throw ConfigError("largesector requires a system scenario");
    const SystemSpec& spec = *sc.system;
    if (!spec.roots_of_unity || spec.n < 3)
        throw ConfigError("largesector requires the roots-of-unity configuration with n >= 3");
    SectorGeometry geo = pipeline_geometry(spec);

    std::vector<int> ms = sc.plan.ms;
    if (ms.empty())
        for (int m = 2; m <= spec.n; ++m) ms.push_back(m);

    std::vector<LargeTask> tasks;
    for (double alpha : sc.alphas)
        for (int m : ms)
            for (Complex lambda : sc.lambda_samples())
                tasks.push_back({alpha, m, lambda, "", {}, 0.0, {}, {}});

    run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
        LargeTask& t = tasks[i];
        SolutionSystem large = build_large_sector(spec, t.alpha, t.m, t.lambda, sc.tol);
        SolutionSystem fss =
            build_fss(spec, t.alpha, geo.locate(t.lambda).kappa, t.lambda, sc.tol);
        SolutionSystem supp = supplement_fss(large, fss);
        t.side = large.region;
        t.det_supp = supp.det_at_alpha();
        t.integral_residual = verify_integral_residual(large, 4, sc.tol);
        t.res_sup = extract_residuals(large).sup;
        t.columns = std::move(large.columns);
        for (SolutionColumn& c : t.columns) c.left = DenseSolution();
    });

    CsvFile csv(fs::path(opt.out) / (sc.out_prefix + "-largesector.csv"),
                {"alpha", "m", "lambda_re", "lambda_im", "side", "k", "omega_re",
                 "omega_im", "pivot", "iterations", "bound_v2", "residual_sup",
                 "integral_residual", "det_supp_re", "det_supp_im"});
    json systems = json::array();
    bool residual_ok = true;
    for (const LargeTask& t : tasks) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const SolutionColumn& col = t.columns[c];
            csv.row({num(t.alpha), std::to_string(t.m), num(t.lambda.real()),
                     num(t.lambda.imag()), t.side, std::to_string(col.k_orig + 1),
                     num(col.omega.real()), num(col.omega.imag()),
                     std::to_string(col.pivot0 + 1), std::to_string(col.cert.iterations),
                     num(col.cert.bound.bound_v2),
                     num(t.res_sup.col(static_cast<Eigen::Index>(c)).maxCoeff()),
                     num(t.integral_residual), num(t.det_supp.real()),
                     num(t.det_supp.imag())});
        }
        json s;
        s["alpha"] = t.alpha;
        s["m"] = t.m;
        s["lambda"] = complex_json(t.lambda);
        s["side"] = t.side;
        s["det_supplemented"] = complex_json(t.det_supp);
        s["integral_residual"] = t.integral_residual;
        s["pass"] = t.integral_residual < kIntegralResidualTol;
        if (t.integral_residual >= kIntegralResidualTol) residual_ok = false;
        systems.push_back(s);
    }
    json report;
    report["scenario"] = sc.name;
    report["command"] = "largesector";
    if (sc.seed) report["seed"] = *sc.seed;
    report["integral_residual_tol"] = kIntegralResidualTol;
    report["systems"] = systems;
    report["ok"] = residual_ok;
    write_json(fs::path(opt.out) / (sc.out_prefix + "-largesector-report.json"), report);
    std::cerr << "wrote " << csv.path().string() << '\n';
    if (!residual_ok) {
        std::cerr << "largesector: integral residual above " << kIntegralResidualTol
                  << '\n';
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sturm: pencil pipeline.  CSV rows carry u_k, u_k^[1] and the pointwise
// representation residuals at the requested abscissas; the JSON report adds
// the sup residuals, the Wronskian-type determinant, and finite-difference
// defect checks of the quasi-derivative and the regularized equation
// (evaluated where the growing column is still O(1), so interpolation noise
// cannot masquerade as a defect).
// ---------------------------------------------------------------------------
std::vector<double> defect_abscissas(const PencilSystem& ps, int k) {
    double rate = std::max(ps.mu(k).real(), 0.0);
    std::vector<double> xs;
    if (rate > 1.0)
        for (double t : {0.1, 0.35, 0.8, 1.5}) xs.push_back(ps.alpha + t / rate);
    else
        for (double t : {0.1, 0.5, 1.0, 2.0, 4.0}) xs.push_back(ps.alpha + t);
    return xs;
}

struct SturmTask {
    double alpha = 0.0;
    Complex z;
    // results
    bool conjugated = false;
    Complex mu1, det;
    Eigen::Matrix2d s_sup;
    double quasi[2] = {0.0, 0.0};
    double regularized[2] = {0.0, 0.0};
    std::vector<double> used_xs;                      // plan.xs, or the default probes
    std::vector<std::array<Complex, 4>> values;       // u1, u1q, u2, u2q per x
    std::vector<std::array<double, 4>> residuals;     // |s_jk| per x
};

int cmd_sturm(const Scenario& sc, const Options& opt) {
    if (!sc.pencil) throw ConfigError("sturm requires a pencil scenario");
    std::vector<double> xs = sc.plan.xs;

    std::vector<SturmTask> tasks;
    for (double alpha : sc.alphas)
        for (Complex z : sc.z_samples()) tasks.push_back({alpha, z});

    run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
        SturmTask& t = tasks[i];
        PencilSystem ps = pencil_fss(*sc.pencil, t.alpha, t.z, sc.tol);
        t.conjugated = ps.conjugated();
        t.mu1 = ps.mu(1);
        t.det = ps.det_at_alpha();
        t.s_sup = ps.residual_sup();
        for (int k = 1; k <= 2; ++k) {
            std::vector<double> probe = defect_abscissas(ps, k);
            t.quasi[k - 1] = quasi_derivative_defect(ps, k, probe);
            t.regularized[k - 1] = regularized_residual(ps, k, probe);
        }
        t.used_xs = xs.empty() ? defect_abscissas(ps, 1) : xs;
        for (double x : t.used_xs) {
            t.values.push_back({ps.u(1, x), ps.u1(1, x), ps.u(2, x), ps.u1(2, x)});
            t.residuals.push_back({std::abs(ps.residual(1, 1, x)),
                                   std::abs(ps.residual(2, 1, x)),
                                   std::abs(ps.residual(1, 2, x)),
                                   std::abs(ps.residual(2, 2, x))});
        }
    });

    CsvFile csv(fs::path(opt.out) / (sc.out_prefix + "-sturm.csv"),
                {"alpha", "z_re", "z_im", "x", "u1_re", "u1_im", "u1_quasi_re",
                 "u1_quasi_im", "u2_re", "u2_im", "u2_quasi_re", "u2_quasi_im",
                 "s11", "s21", "s12", "s22"});
    json systems = json::array();
    bool ok = true;
    for (const SturmTask& t : tasks) {
        for (std::size_t r = 0; r < t.values.size(); ++r) {
            double x = t.used_xs[r];
            const auto& v = t.values[r];
            const auto& s = t.residuals[r];
            csv.row({num(t.alpha), num(t.z.real()), num(t.z.imag()), num(x),
                     num(v[0].real()), num(v[0].imag()), num(v[1].real()),
                     num(v[1].imag()), num(v[2].real()), num(v[2].imag()),
                     num(v[3].real()), num(v[3].imag()), num(s[0]), num(s[1]),
                     num(s[2]), num(s[3])});
        }
        double zsq = std::max(1.0, std::norm(t.z));
        bool pass = t.quasi[0] < kQuasiDefectTol && t.quasi[1] < kQuasiDefectTol &&
                    t.regularized[0] < kRegularizedScale * zsq &&
                    t.regularized[1] < kRegularizedScale * zsq;
        if (!pass) ok = false;
        json s;
        s["alpha"] = t.alpha;
        s["z"] = complex_json(t.z);
        s["conjugated"] = t.conjugated;
        s["mu1"] = complex_json(t.mu1);
        s["det"] = complex_json(t.det);
        s["residual_sup"] = json::array({json::array({t.s_sup(0, 0), t.s_sup(0, 1)}),
                                         json::array({t.s_sup(1, 0), t.s_sup(1, 1)})});
        s["quasi_defect"] = json::array({t.quasi[0], t.quasi[1]});
        s["regularized_defect"] = json::array({t.regularized[0], t.regularized[1]});
        s["pass"] = pass;
        systems.push_back(s);
    }
    json report;
    report["scenario"] = sc.name;
    report["command"] = "sturm";
    if (sc.seed) report["seed"] = *sc.seed;
    report["quasi_defect_tol"] = kQuasiDefectTol;
    report["regularized_defect_scale"] = kRegularizedScale;
    report["systems"] = systems;
    report["ok"] = ok;
    write_json(fs::path(opt.out) / (sc.out_prefix + "-sturm-report.json"), report);
    std::cerr << "wrote " << csv.path().string() << '\n';
    if (!ok) {
        std::cerr << "sturm: finite-difference defect above tolerance\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep-theta: per (alpha, lambda) row with the kernel-sup estimator theta
// (max over the n column contexts), the perturbation tail gamma, and the
// oscillation-functional majorant psi = max over coupled pairs of
// Psi_jl(+-i lambda (b_j - b_l)).
// ---------------------------------------------------------------------------
struct ThetaTask {
    double alpha = 0.0;
    Complex lambda;
    // results
    int kappa = 0;
    double theta = 0.0, theta_grid = 0.0, theta_tail = 0.0;
    double gamma = 0.0, psi = 0.0;
    double bound_v = 0.0, bound_v2 = 0.0;
};

int cmd_sweep_theta(const Scenario& sc, const Options& opt) {
    SystemSpec spec = sc.system ? *sc.system : reduce_pencil(*sc.pencil);
    SectorGeometry geo = pipeline_geometry(spec);

    std::vector<ThetaTask> tasks;
    for (double alpha : sc.alphas)
        for (Complex lambda : sc.lambda_samples()) tasks.push_back({alpha, lambda});

    double rate = 0.0;
    for (Complex b : spec.b) rate = std::max(rate, 4.0 * std::abs(b));

    run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
        ThetaTask& t = tasks[i];
        const Sector& sec = geo.locate(t.lambda);
        t.kappa = sec.kappa;
        SystemSpec pspec = permuted_spec(spec, sec.perm);
        PropagatorMatrix M(pspec, t.alpha, sc.tol);
        double dp = dp_cap_for(std::abs(t.lambda), rate, sc.tol);
        auto tab = make_node_tables(pspec, M, dp, sc.tol);
        for (int k = 0; k < spec.n; ++k) {
            KernelContext ctx(tab, k, pspec.b[static_cast<std::size_t>(k)], t.lambda,
                              sc.tol);
            ContractionInfo info = contraction_bound(ctx, pspec);
            if (info.theta > t.theta) {
                t.theta = info.theta;
                t.theta_grid = info.theta_grid;
                t.theta_tail = info.theta_tail;
            }
            t.gamma = std::max(t.gamma, info.gamma);
            t.bound_v = std::max(t.bound_v, info.bound_v);
            t.bound_v2 = std::max(t.bound_v2, info.bound_v2);
        }
        for (int j = 0; j < spec.n; ++j)
            for (int l = 0; l < spec.n; ++l) {
                if (j == l) continue;
                Complex bj = pspec.b[static_cast<std::size_t>(j)];
                Complex bl = pspec.b[static_cast<std::size_t>(l)];
                if (bj == bl) continue;
                Complex tilde = Complex(0.0, 1.0) * t.lambda * (bj - bl);
                if (j > l) tilde = -tilde;
                if (tilde.imag() < 0.0 && tilde.imag() > -1e-12)
                    tilde = Complex(tilde.real(), 0.0);
                t.psi = std::max(t.psi, psi_entry(*tab, j, l, tilde).value);
            }
    });

    CsvFile csv(fs::path(opt.out) / (sc.out_prefix + "-theta.csv"),
                {"alpha", "lambda_re", "lambda_im", "theta", "gamma", "psi", "kappa",
                 "theta_grid", "theta_tail", "bound_v", "bound_v2"});
    for (const ThetaTask& t : tasks)
        csv.row({num(t.alpha), num(t.lambda.real()), num(t.lambda.imag()), num(t.theta),
                 num(t.gamma), num(t.psi), std::to_string(t.kappa), num(t.theta_grid),
                 num(t.theta_tail), num(t.bound_v), num(t.bound_v2)});
    std::cerr << "wrote " << csv.path().string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// verify: run every certificate the scenario supports and write a pass/fail
// report.  Failures of the residual checks exit 3; contraction/degeneracy
// failures surface as exceptions and exit 1 via main().
// ---------------------------------------------------------------------------
struct Check {
    std::string name;
    double alpha;
    Complex point;
    double value;
    double threshold;
    bool pass;
};

json check_json(const Check& c) {
    json j;
    j["name"] = c.name;
    j["alpha"] = c.alpha;
    j["point"] = complex_json(c.point);
    j["value"] = c.value;
    j["threshold"] = c.threshold;
    j["pass"] = c.pass;
    return j;
}

int cmd_verify(const Scenario& sc, const Options& opt) {
    std::vector<std::vector<Check>> buckets;

    if (sc.system) {
        const SystemSpec& spec = *sc.system;
        SectorGeometry geo = pipeline_geometry(spec);
        struct VTask {
            double alpha;
            Complex lambda;
            std::vector<Check> checks;
        };
        std::vector<VTask> tasks;
        for (double alpha : sc.alphas)
            for (Complex lambda : sc.lambda_samples()) tasks.push_back({alpha, lambda, {}});

        std::vector<int> ms;
        if (spec.roots_of_unity && spec.n >= 3) {
            ms = sc.plan.ms;
        }

        run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
            VTask& t = tasks[i];
            auto add = [&](const std::string& name, double value, double threshold) {
                t.checks.push_back({name, t.alpha, t.lambda, value, threshold,
                                    value < threshold});
            };
            SolutionSystem sys =
                build_fss(spec, t.alpha, geo.locate(t.lambda).kappa, t.lambda, sc.tol);
            add("fss.integral_residual", verify_integral_residual(sys, 4, sc.tol),
                kIntegralResidualTol);
            add("fss.det_unit", std::abs(std::abs(sys.det_at_alpha()) - 1.0), kDetUnitTol);
            double init_defect = 0.0;
            for (int c = 0; c < sys.cols(); ++c) {
                Eigen::VectorXcd za = sys.z_at_alpha(c);
                int kp = sys.columns[static_cast<std::size_t>(c)].k_pos;
                for (int jj = kp; jj < spec.n; ++jj) {
                    double want = jj == kp ? 1.0 : 0.0;
                    init_defect = std::max(init_defect, std::abs(za(jj) - want));
                }
            }
            add("fss.unit_at_alpha", init_defect, 1e-12);
            for (int m : ms) {
                SolutionSystem large =
                    build_large_sector(spec, t.alpha, m, t.lambda, sc.tol);
                SolutionSystem supp = supplement_fss(large, sys);
                add("large.m" + std::to_string(m) + ".integral_residual",
                    verify_integral_residual(large, 4, sc.tol), kIntegralResidualTol);
                add("large.m" + std::to_string(m) + ".det_unit",
                    std::abs(std::abs(supp.det_at_alpha()) - 1.0), kDetUnitTol);
            }
        });
        for (VTask& t : tasks) buckets.push_back(std::move(t.checks));
    } else {
        struct PTask {
            double alpha;
            Complex z;
            std::vector<Check> checks;
        };
        std::vector<PTask> tasks;
        for (double alpha : sc.alphas)
            for (Complex z : sc.z_samples()) tasks.push_back({alpha, z, {}});

        run_indexed(opt.jobs, tasks.size(), [&](std::size_t i) {
            PTask& t = tasks[i];
            auto add = [&](const std::string& name, double value, double threshold) {
                t.checks.push_back({name, t.alpha, t.z, value, threshold,
                                    value < threshold});
            };
            PencilSystem ps = pencil_fss(*sc.pencil, t.alpha, t.z, sc.tol);
            Complex want_det = -2.0 * ps.z_solve * Complex(0.0, 1.0);
            add("pencil.det", std::abs(ps.det_at_alpha() - want_det) / std::abs(want_det),
                1e-9);
            double zsq = std::max(1.0, std::norm(t.z));
            for (int k = 1; k <= 2; ++k) {
                std::vector<double> probe = defect_abscissas(ps, k);
                add("pencil.quasi_defect.k" + std::to_string(k),
                    quasi_derivative_defect(ps, k, probe), kQuasiDefectTol);
                add("pencil.regularized.k" + std::to_string(k),
                    regularized_residual(ps, k, probe), kRegularizedScale * zsq);
            }
        });
        for (PTask& t : tasks) buckets.push_back(std::move(t.checks));
    }

    json all = json::array();
    int failed = 0, total = 0;
    for (const std::vector<Check>& bucket : buckets)
        for (const Check& c : bucket) {
            ++total;
            if (!c.pass) {
                ++failed;
                std::cerr << "FAIL " << c.name << " alpha=" << c.alpha << " point=("
                          << c.point.real() << "," << c.point.imag() << ") value=" << c.value
                          << " threshold=" << c.threshold << '\n';
            }
            all.push_back(check_json(c));
        }

    json report;
    report["scenario"] = sc.name;
    report["command"] = "verify";
    if (sc.seed) report["seed"] = *sc.seed;
    report["checks"] = all;
    report["total"] = total;
    report["failed"] = failed;
    report["ok"] = failed == 0;
    fs::path path = fs::path(opt.out) / (sc.out_prefix + "-verify.json");
    write_json(path, report);
    std::cout << "verify: " << total << " checks, " << failed << " failed\n";
    std::cerr << "wrote " << path.string() << '\n';
    return failed == 0 ? 0 : 3;
}

int dispatch(const std::string& cmd, const Options& opt) {
    Scenario sc = load_scenario(opt.config);
    for (const std::string& ov : opt.tol_overrides) apply_tol_override(sc.tol, ov);
    fs::create_directories(opt.out);
    if (cmd == "sectors") return cmd_sectors(sc, opt);
    if (cmd == "fss") return cmd_fss(sc, opt);
    if (cmd == "largesector") return cmd_largesector(sc, opt);
    if (cmd == "sturm") return cmd_sturm(sc, opt);
    if (cmd == "sweep-theta") return cmd_sweep_theta(sc, opt);
    if (cmd == "verify") return cmd_verify(sc, opt);
    throw std::logic_error("unknown subcommand " + cmd);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rigorously certified solution systems for first-order ODE systems "
                 "on the half-line"};
    app.require_subcommand(1);

    Options opt;
    std::vector<CLI::App*> subs;
    for (const char* name : {"sectors", "fss", "largesector", "sturm", "sweep-theta",
                             "verify"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "scenario document (JSON)")
            ->required();
        sub->add_option("--jobs", opt.jobs, "worker threads (default 1)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", opt.out, "output directory (default .)");
        sub->add_option("--tol-override", opt.tol_overrides,
                        "KEY=VALUE tolerance override (repeatable)");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // usage problems are configuration problems
    }

    std::string cmd;
    for (std::size_t i = 0; i < subs.size(); ++i)
        if (subs[i]->parsed()) cmd = subs[i]->get_name();

    try {
        return dispatch(cmd, opt);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const ThresholdError& e) {
        std::cerr << "certificate failure: " << e.what() << '\n';
        return 1;
    } catch (const DegeneracyError& e) {
        std::cerr << "certificate failure: " << e.what() << '\n';
        return 1;
    } catch (const CoefficientError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
