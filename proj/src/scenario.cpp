#include "halfline/scenario.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace halfline {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) fail(where, "unknown key '" + item.key() + "'");
    }
}

double as_double(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

Complex as_complex(const json& j, const std::string& where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array()) {
        if (j.size() != 2) fail(where, "complex array must be [re, im]");
        return Complex(as_double(j[0], where + "[0]"), as_double(j[1], where + "[1]"));
    }
    if (j.is_object()) {
        require_keys(j, where, {"re", "im"});
        double re = j.contains("re") ? as_double(j["re"], where + ".re") : 0.0;
        double im = j.contains("im") ? as_double(j["im"], where + ".im") : 0.0;
        return Complex(re, im);
    }
    fail(where, "expected a number, [re, im], or {re, im}");
}

// ---------------------------------------------------------------------------
// Coefficient descriptors
// ---------------------------------------------------------------------------

CoefficientFunction parse_coefficient(const json& j, const json* table,
                                      const std::string& where, int depth);

CoefficientFunction parse_descriptor(const json& j, const json* table,
                                     const std::string& where, int depth) {
    if (depth > 8) fail(where, "descriptor nesting too deep");
    if (!j.is_object()) fail(where, "descriptor must be an object or a reference string");
    if (!j.contains("kind")) fail(where, "descriptor needs a 'kind'");
    const std::string kind = j["kind"].is_string() ? j["kind"].get<std::string>() : "";

    if (kind == "zero") {
        require_keys(j, where, {"kind"});
        return CoefficientFunction::zero();
    }
    if (kind == "exp") {
        require_keys(j, where, {"kind", "scale", "beta"});
        if (!j.contains("scale") || !j.contains("beta"))
            fail(where, "'exp' needs 'scale' and 'beta'");
        Complex scale = as_complex(j["scale"], where + ".scale");
        double beta = as_double(j["beta"], where + ".beta");
        if (!(beta > 0.0)) fail(where, "'beta' must be positive");
        return CoefficientFunction::exp_decay(scale, beta);
    }
    if (kind == "poly") {
        require_keys(j, where, {"kind", "pieces"});
        if (!j.contains("pieces") || !j["pieces"].is_array() || j["pieces"].empty())
            fail(where, "'poly' needs a nonempty 'pieces' array");
        std::vector<PolyPiece> pieces;
        int idx = 0;
        for (const json& pj : j["pieces"]) {
            std::string pw = where + ".pieces[" + std::to_string(idx++) + "]";
            if (!pj.is_object()) fail(pw, "expected an object");
            require_keys(pj, pw, {"lo", "hi", "coef"});
            if (!pj.contains("lo") || !pj.contains("hi") || !pj.contains("coef"))
                fail(pw, "needs 'lo', 'hi', 'coef'");
            PolyPiece piece;
            piece.lo = as_double(pj["lo"], pw + ".lo");
            piece.hi = as_double(pj["hi"], pw + ".hi");
            if (!pj["coef"].is_array() || pj["coef"].empty())
                fail(pw, "'coef' must be a nonempty array");
            int ci = 0;
            for (const json& cj : pj["coef"])
                piece.coef.push_back(
                    as_complex(cj, pw + ".coef[" + std::to_string(ci++) + "]"));
            pieces.push_back(std::move(piece));
        }
        return CoefficientFunction::piecewise_poly(std::move(pieces));
    }
    if (kind == "tabulated") {
        require_keys(j, where, {"kind", "knots", "values"});
        if (!j.contains("knots") || !j.contains("values"))
            fail(where, "'tabulated' needs 'knots' and 'values'");
        if (!j["knots"].is_array() || !j["values"].is_array())
            fail(where, "'knots' and 'values' must be arrays");
        std::vector<double> knots;
        std::vector<Complex> values;
        int ki = 0;
        for (const json& kj : j["knots"])
            knots.push_back(as_double(kj, where + ".knots[" + std::to_string(ki++) + "]"));
        int vi = 0;
        for (const json& vj : j["values"])
            values.push_back(
                as_complex(vj, where + ".values[" + std::to_string(vi++) + "]"));
        return CoefficientFunction::tabulated(knots, values);
    }
    if (kind == "sum") {
        require_keys(j, where, {"kind", "terms"});
        if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
            fail(where, "'sum' needs a nonempty 'terms' array");
        CoefficientFunction acc;
        int ti = 0;
        for (const json& tj : j["terms"])
            acc = acc + parse_coefficient(
                            tj, table, where + ".terms[" + std::to_string(ti++) + "]",
                            depth + 1);
        return acc;
    }
    fail(where, "unknown coefficient kind '" + kind + "'");
}

CoefficientFunction parse_coefficient(const json& j, const json* table,
                                      const std::string& where, int depth) {
    if (j.is_string()) {
        const std::string ref = j.get<std::string>();
        if (table == nullptr || !table->contains(ref))
            fail(where, "coefficient reference '" + ref + "' not found");
        return parse_descriptor((*table)[ref], table, "coefficients." + ref, depth + 1);
    }
    return parse_descriptor(j, table, where, depth);
}

// ---------------------------------------------------------------------------
// System / pencil blocks
// ---------------------------------------------------------------------------

void fill_entries(CoeffMatrix& m, const json& arr, const json* table,
                  const std::string& where) {
    if (!arr.is_array()) fail(where, "expected an array of entries");
    int idx = 0;
    for (const json& ej : arr) {
        std::string ew = where + "[" + std::to_string(idx++) + "]";
        if (!ej.is_object()) fail(ew, "expected an object");
        require_keys(ej, ew, {"row", "col", "coeff"});
        if (!ej.contains("row") || !ej.contains("col") || !ej.contains("coeff"))
            fail(ew, "needs 'row', 'col', 'coeff'");
        int row = as_int(ej["row"], ew + ".row");
        int col = as_int(ej["col"], ew + ".col");
        if (row < 1 || row > m.size() || col < 1 || col > m.size())
            fail(ew, "index out of range (entries are 1-based)");
        m(row - 1, col - 1) = parse_coefficient(ej["coeff"], table, ew + ".coeff", 0);
    }
}

WeightFunction parse_rho(const json& j, const json* table, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where, {"constant", "decay"});
    double c = j.contains("constant") ? as_double(j["constant"], where + ".constant") : 0.0;
    CoefficientFunction decay;
    if (j.contains("decay"))
        decay = parse_coefficient(j["decay"], table, where + ".decay", 0);
    if (c == 0.0 && decay.is_zero()) fail(where, "weight must not vanish");
    return WeightFunction(c, std::move(decay));
}

SystemSpec parse_system(const json& j, const json* table) {
    const std::string where = "system";
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where, {"n", "b", "roots_of_unity", "rho", "A", "C"});
    if (!j.contains("n")) fail(where, "needs 'n'");
    int n = as_int(j["n"], where + ".n");
    if (n < 2 || n > 16) fail(where, "'n' must be between 2 and 16");

    std::vector<Complex> b;
    bool roots = j.contains("roots_of_unity") &&
                 j["roots_of_unity"].is_boolean() && j["roots_of_unity"].get<bool>();
    if (roots) {
        if (j.contains("b")) fail(where, "'b' conflicts with roots_of_unity");
        b = roots_of_unity_ordered(n);
    } else {
        if (!j.contains("b")) fail(where, "needs 'b' or roots_of_unity = true");
        if (!j["b"].is_array() || static_cast<int>(j["b"].size()) != n)
            fail(where, "'b' must list n characteristic numbers");
        int bi = 0;
        for (const json& bj : j["b"])
            b.push_back(as_complex(bj, where + ".b[" + std::to_string(bi++) + "]"));
    }

    CoeffMatrix A(n);
    if (j.contains("A")) fill_entries(A, j["A"], table, where + ".A");

    std::vector<CoeffMatrix> C;
    if (j.contains("C")) {
        if (!j["C"].is_array()) fail(where + ".C", "expected an array");
        int idx = 0;
        for (const json& cj : j["C"]) {
            std::string cw = where + ".C[" + std::to_string(idx++) + "]";
            if (!cj.is_object()) fail(cw, "expected an object");
            require_keys(cj, cw, {"eta", "entries"});
            if (!cj.contains("eta") || !cj.contains("entries"))
                fail(cw, "needs 'eta' and 'entries'");
            int eta = as_int(cj["eta"], cw + ".eta");
            if (eta < 1 || eta > 16) fail(cw, "'eta' must be between 1 and 16");
            if (static_cast<int>(C.size()) < eta) C.resize(eta, CoeffMatrix(n));
            fill_entries(C[eta - 1], cj["entries"], table, cw + ".entries");
        }
    }

    WeightFunction rho = WeightFunction::constant(1.0);
    if (j.contains("rho")) rho = parse_rho(j["rho"], table, where + ".rho");

    try {
        return make_system(n, std::move(b), std::move(A), std::move(C), std::move(rho));
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
}

PencilSpec parse_pencil(const json& j, const json* table) {
    const std::string where = "pencil";
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where, {"sigma", "p0"});
    PencilSpec p;
    if (j.contains("sigma"))
        p.sigma = parse_coefficient(j["sigma"], table, where + ".sigma", 0);
    if (j.contains("p0")) p.p0 = parse_coefficient(j["p0"], table, where + ".p0", 0);
    return p;
}

// ---------------------------------------------------------------------------
// Sampling plan
// ---------------------------------------------------------------------------

SamplingPlan parse_plan(const json& j) {
    const std::string where = "plan";
    SamplingPlan plan;
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where, {"rays", "lambdas", "zs", "kappas", "ms", "xs"});
    if (j.contains("rays")) {
        if (!j["rays"].is_array()) fail(where + ".rays", "expected an array");
        int idx = 0;
        for (const json& rj : j["rays"]) {
            std::string rw = where + ".rays[" + std::to_string(idx++) + "]";
            if (!rj.is_object()) fail(rw, "expected an object");
            require_keys(rj, rw, {"arg", "arg_pi", "radii"});
            RayPlan ray;
            if (rj.contains("arg") && rj.contains("arg_pi"))
                fail(rw, "'arg' and 'arg_pi' are mutually exclusive");
            if (rj.contains("arg"))
                ray.arg = as_double(rj["arg"], rw + ".arg");
            else if (rj.contains("arg_pi"))
                ray.arg = pi() * as_double(rj["arg_pi"], rw + ".arg_pi");
            else
                fail(rw, "needs 'arg' or 'arg_pi'");
            if (!rj.contains("radii") || !rj["radii"].is_array() || rj["radii"].empty())
                fail(rw, "needs a nonempty 'radii' array");
            int ri = 0;
            for (const json& dj : rj["radii"]) {
                double r = as_double(dj, rw + ".radii[" + std::to_string(ri++) + "]");
                if (!(r > 0.0)) fail(rw, "radii must be positive");
                ray.radii.push_back(r);
            }
            plan.rays.push_back(std::move(ray));
        }
    }
    auto fill_points = [&](const char* key, std::vector<Complex>& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) fail(where + "." + key, "expected an array");
        int idx = 0;
        for (const json& pj : j[key])
            out.push_back(as_complex(
                pj, where + "." + key + "[" + std::to_string(idx++) + "]"));
    };
    fill_points("lambdas", plan.lambdas);
    fill_points("zs", plan.zs);
    if (j.contains("kappas")) {
        int idx = 0;
        for (const json& kj : j["kappas"]) {
            int k = as_int(kj, where + ".kappas[" + std::to_string(idx++) + "]");
            if (k < 1) fail(where + ".kappas", "sector labels are 1-based");
            plan.kappas.push_back(k);
        }
    }
    if (j.contains("ms")) {
        int idx = 0;
        for (const json& mj : j["ms"]) {
            int m = as_int(mj, where + ".ms[" + std::to_string(idx++) + "]");
            if (m < 1) fail(where + ".ms", "column labels are 1-based");
            plan.ms.push_back(m);
        }
    }
    if (j.contains("xs")) {
        int idx = 0;
        for (const json& xj : j["xs"]) {
            double x = as_double(xj, where + ".xs[" + std::to_string(idx++) + "]");
            if (x < 0.0) fail(where + ".xs", "abscissas must be nonnegative");
            plan.xs.push_back(x);
        }
    }
    return plan;
}

void parse_tolerances(const json& j, Tolerances& tol) {
    const std::string where = "tolerances";
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& v = item.value();
        if (key == "quad") tol.quad = as_double(v, where + ".quad");
        else if (key == "ode") tol.ode = as_double(v, where + ".ode");
        else if (key == "tail") tol.tail = as_double(v, where + ".tail");
        else if (key == "fixed_point") tol.fixed_point = as_double(v, where + ".fixed_point");
        else if (key == "iteration_cap") tol.iteration_cap = as_int(v, where + ".iteration_cap");
        else if (key == "phase_cap") tol.phase_cap = as_double(v, where + ".phase_cap");
        else if (key == "dp_max") tol.dp_max = as_double(v, where + ".dp_max");
        else if (key == "ordering_slack") tol.ordering_slack = as_double(v, where + ".ordering_slack");
        else fail(where, "unknown tolerance key '" + key + "'");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Scenario API
// ---------------------------------------------------------------------------

std::vector<Complex> Scenario::lambda_samples() const {
    std::vector<Complex> out;
    for (const RayPlan& ray : plan.rays)
        for (double r : ray.radii) out.push_back(std::polar(r, ray.arg));
    out.insert(out.end(), plan.lambdas.begin(), plan.lambdas.end());
    return out;
}

std::vector<Complex> Scenario::z_samples() const {
    std::vector<Complex> out;
    if (pencil)
        for (const RayPlan& ray : plan.rays)
            for (double r : ray.radii) out.push_back(std::polar(r, ray.arg));
    out.insert(out.end(), plan.zs.begin(), plan.zs.end());
    return out;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin + ": document must be an object");
    require_keys(root, origin,
                 {"schema", "name", "coefficients", "system", "pencil", "alphas",
                  "plan", "tolerances", "seed", "output"});

    Scenario sc;
    if (!root.contains("schema") || !root["schema"].is_number_integer() ||
        root["schema"].get<int>() != 1)
        throw ConfigError(origin + ": 'schema' must be the integer 1");
    if (!root.contains("name") || !root["name"].is_string() ||
        root["name"].get<std::string>().empty())
        throw ConfigError(origin + ": 'name' must be a nonempty string");
    sc.name = root["name"].get<std::string>();

    const json* table = nullptr;
    if (root.contains("coefficients")) {
        if (!root["coefficients"].is_object())
            fail("coefficients", "expected an object of named descriptors");
        table = &root["coefficients"];
    }

    const bool has_sys = root.contains("system");
    const bool has_pen = root.contains("pencil");
    if (has_sys == has_pen)
        throw ConfigError(origin + ": exactly one of 'system' or 'pencil' is required");
    if (has_sys) sc.system = parse_system(root["system"], table);
    if (has_pen) sc.pencil = parse_pencil(root["pencil"], table);

    if (root.contains("alphas")) {
        if (!root["alphas"].is_array() || root["alphas"].empty())
            fail("alphas", "expected a nonempty array");
        sc.alphas.clear();
        int idx = 0;
        for (const json& aj : root["alphas"]) {
            double a = as_double(aj, "alphas[" + std::to_string(idx++) + "]");
            if (a < 0.0) fail("alphas", "values must be nonnegative");
            sc.alphas.push_back(a);
        }
    }

    if (!root.contains("plan")) throw ConfigError(origin + ": 'plan' is required");
    sc.plan = parse_plan(root["plan"]);
    if (!sc.plan.has_points())
        throw ConfigError(origin + ": sampling plan must contain rays, lambdas, or zs");

    if (root.contains("tolerances")) parse_tolerances(root["tolerances"], sc.tol);

    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned())
            fail("seed", "expected a nonnegative integer");
        sc.seed = root["seed"].get<unsigned long>();
    }

    sc.out_prefix = sc.name;
    if (root.contains("output")) {
        const json& oj = root["output"];
        if (!oj.is_object()) fail("output", "expected an object");
        require_keys(oj, "output", {"prefix"});
        if (oj.contains("prefix")) {
            if (!oj["prefix"].is_string() || oj["prefix"].get<std::string>().empty())
                fail("output", "'prefix' must be a nonempty string");
            sc.out_prefix = oj["prefix"].get<std::string>();
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

void apply_tol_override(Tolerances& tol, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == assignment.size())
        throw ConfigError("tolerance override must be KEY=VALUE: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string val = assignment.substr(eq + 1);
    json j;
    try {
        j = json::parse(val);
    } catch (const json::parse_error&) {
        throw ConfigError("cannot parse tolerance value: " + assignment);
    }
    json wrap = json::object();
    wrap[key] = j;
    parse_tolerances(wrap, tol);
}

std::string csv_num(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace halfline
