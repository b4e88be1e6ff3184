#pragma once

#include "halfline/sturm.hpp"
#include "halfline/system.hpp"
#include "halfline/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace halfline {

// ---------------------------------------------------------------------------
// Scenario documents: versioned JSON (schema: 1) describing one system or
// pencil, the alpha grid, the lambda/z sampling plan, tolerance overrides,
// and output naming.  Row/column indices and sector labels are 1-based in
// the document, matching the mathematical notation used in reports.
// ---------------------------------------------------------------------------

struct RayPlan {
    double arg = 0.0;           ///< radians; "arg_pi" in the document scales pi
    std::vector<double> radii;  ///< strictly positive
};

struct SamplingPlan {
    std::vector<RayPlan> rays;
    std::vector<Complex> lambdas; ///< explicit lambda samples
    std::vector<Complex> zs;      ///< explicit pencil z samples
    std::vector<int> kappas;      ///< sectors to build (empty: locate per lambda)
    std::vector<int> ms;          ///< large-sector start indices
    std::vector<double> xs;       ///< evaluation abscissas for solution tables

    bool has_points() const { return !rays.empty() || !lambdas.empty() || !zs.empty(); }
};

struct Scenario {
    int schema = 1;
    std::string name;
    std::optional<SystemSpec> system;
    std::optional<PencilSpec> pencil;
    std::vector<double> alphas{0.0};
    SamplingPlan plan;
    Tolerances tol;
    std::optional<unsigned long> seed;
    std::string out_prefix;

    /// All lambda samples in document order: rays (outer) by radius (inner),
    /// then explicit points.
    std::vector<Complex> lambda_samples() const;
    std::vector<Complex> z_samples() const;
};

/// Parses and validates one scenario document.  Every violation (wrong
/// version, unknown key or kind, missing reference, malformed number, index
/// out of range, empty plan) throws ConfigError naming the offending path.
Scenario parse_scenario_text(const std::string& text,
                             const std::string& origin = "<memory>");

/// Reads the file and delegates to parse_scenario_text.
Scenario load_scenario(const std::string& path);

/// Applies one KEY=VALUE override to the tolerance set.  Keys: quad, ode,
/// tail, fixed_point, iteration_cap, phase_cap, dp_max, ordering_slack.
void apply_tol_override(Tolerances& tol, const std::string& assignment);

/// Shortest decimal string that parses back to exactly the same double;
/// used for every CSV payload so reruns are byte-identical.
std::string csv_num(double v);

} // namespace halfline
