#include "doctest.h"

#include "halfline/scenario.hpp"

#include <cmath>
#include <string>

using namespace halfline;

namespace {

std::string dir() { return HALFLINE_SCENARIO_DIR; }

std::string minimal(const std::string& extra) {
    return "{\"schema\":1,\"name\":\"t\",\"system\":{\"n\":2,\"roots_of_unity\":true},"
           "\"plan\":{\"lambdas\":[[1,1]]}" +
           (extra.empty() ? "" : "," + extra) + "}";
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("bundled scenarios load and validate") {
    for (const char* name :
         {"trivial-n2", "expdecay-n2", "kernel-oracle-n2", "roots-n3", "roots-n4",
          "sturm-expdecay", "sturm-phase", "threshold-fail-n2"}) {
        Scenario sc = load_scenario(dir() + "/" + name + ".json");
        CHECK(sc.name == name);
        CHECK(sc.system.has_value() != sc.pencil.has_value());
        CHECK(sc.plan.has_points());
        CHECK(sc.out_prefix == name);
    }
}

TEST_CASE("expdecay-n2 parses to the documented system") {
    Scenario sc = load_scenario(dir() + "/expdecay-n2.json");
    REQUIRE(sc.system.has_value());
    const SystemSpec& spec = *sc.system;
    CHECK(spec.n == 2);
    CHECK(spec.roots_of_unity);
    CHECK(std::abs(spec.A(0, 1)(0.5) - 0.3 * std::exp(-0.5)) < 1e-15);
    CHECK(std::abs(spec.A(1, 0)(0.5) - 0.3 * std::exp(-0.5)) < 1e-15);
    CHECK(spec.A(0, 0).is_zero());
    REQUIRE(spec.C.size() == 1);
    CHECK(std::abs(spec.C[0](0, 1)(0.0) - 2.5) < 1e-15);
    CHECK(std::abs(spec.C[0](1, 0)(0.0) + 2.5) < 1e-15);
    CHECK(spec.C[0](0, 0).is_zero());
    CHECK(sc.alphas == std::vector<double>{0.0, 1.0, 2.0, 4.0});
    REQUIRE(sc.plan.rays.size() == 8);
    CHECK(std::abs(sc.plan.rays[0].arg - pi() / 8.0) < 1e-15);
    CHECK(sc.lambda_samples().size() == 24);
}

TEST_CASE("pencil scenario resolves coefficient references") {
    Scenario sc = load_scenario(dir() + "/sturm-expdecay.json");
    REQUIRE(sc.pencil.has_value());
    CHECK(std::abs(sc.pencil->sigma(0.0) - 1.0) < 1e-15);
    CHECK(sc.pencil->p0.is_zero());
    CHECK(sc.z_samples().size() == 3);
    CHECK(std::abs(sc.z_samples()[0] - std::polar(10.0, -pi() / 4.0)) < 1e-12);
}

TEST_CASE("schema violations raise ConfigError") {
    auto bad = [](const std::string& text) {
        CHECK_THROWS_AS(parse_scenario_text(text), ConfigError);
    };
    bad("{");                                            // malformed JSON
    bad("{}");                                           // nothing present
    bad("[1,2]");                                        // not an object
    bad(R"({"schema":2,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","plan":{"lambdas":[[1,1]]}})");                 // no system/pencil
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"pencil":{},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","bogus":3,"system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{}})");  // empty plan
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true}})");            // missing plan
    bad(R"({"schema":1,"name":"x","system":{"n":1,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"b":[1,-1]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"b":[1]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"A":[{"row":3,"col":1,"coeff":{"kind":"zero"}}]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"A":[{"row":1,"col":2,"coeff":"nope"}]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"A":[{"row":1,"col":2,"coeff":{"kind":"wavelet"}}]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"A":[{"row":1,"col":2,"coeff":{"kind":"exp","scale":1.0,"beta":-1.0}}]},"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1,7]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"rays":[{"arg":0.1,"arg_pi":0.1,"radii":[1]}]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"rays":[{"arg":0.1,"radii":[-1]}]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"alphas":[-1],"plan":{"lambdas":[[1,1]]}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]},"tolerances":{"qquad":1e-9}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]},"seed":-3})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true},"plan":{"lambdas":[[1,1]]},"output":{"prefix":""}})");
    bad(R"({"schema":1,"name":"x","system":{"n":2,"roots_of_unity":true,"rho":{"constant":0.0}},"plan":{"lambdas":[[1,1]]}})");
}

TEST_CASE("inline descriptors, sums, and options parse") {
    std::string text = minimal(
        R"("tolerances":{"quad":1e-8,"iteration_cap":50},"seed":7,"output":{"prefix":"alt"})");
    Scenario sc = parse_scenario_text(text);
    CHECK(sc.tol.quad == 1e-8);
    CHECK(sc.tol.iteration_cap == 50);
    CHECK(sc.tol.ode == Tolerances{}.ode); // untouched default
    REQUIRE(sc.seed.has_value());
    CHECK(*sc.seed == 7);
    CHECK(sc.out_prefix == "alt");

    std::string sum = R"({"schema":1,"name":"s","system":{"n":2,"roots_of_unity":true,
      "A":[{"row":1,"col":2,"coeff":{"kind":"sum","terms":[
          {"kind":"exp","scale":[0.0,1.0],"beta":2.0},
          {"kind":"poly","pieces":[{"lo":0.0,"hi":1.0,"coef":[0.25]}]}]}}]},
      "plan":{"lambdas":[[1,1]]}})";
    Scenario s2 = parse_scenario_text(sum);
    Complex v = s2.system->A(0, 1)(0.5);
    CHECK(std::abs(v - (Complex(0.0, 1.0) * std::exp(-1.0) + 0.25)) < 1e-15);
    CHECK(s2.system->A(0, 1).breakpoints().size() == 2);
}

TEST_CASE("tolerance overrides") {
    Tolerances tol;
    apply_tol_override(tol, "quad=1e-8");
    CHECK(tol.quad == 1e-8);
    apply_tol_override(tol, "iteration_cap=33");
    CHECK(tol.iteration_cap == 33);
    apply_tol_override(tol, "phase_cap=0.5");
    CHECK(tol.phase_cap == 0.5);
    CHECK_THROWS_AS(apply_tol_override(tol, "nonsense=1"), ConfigError);
    CHECK_THROWS_AS(apply_tol_override(tol, "quad"), ConfigError);
    CHECK_THROWS_AS(apply_tol_override(tol, "quad="), ConfigError);
    CHECK_THROWS_AS(apply_tol_override(tol, "quad=fast"), ConfigError);
    CHECK_THROWS_AS(apply_tol_override(tol, "iteration_cap=1.5"), ConfigError);
}

TEST_CASE("csv numbers round-trip exactly") {
    for (double v : {0.0, 1.0, -1.5, 1e-17, 3.141592653589793, 0.1, 1e300,
                     -2.2250738585072014e-308}) {
        CHECK(std::stod(csv_num(v)) == v);
    }
    CHECK(csv_num(0.1) == "0.1");
    CHECK(csv_num(2.0) == "2");
}

} // TEST_SUITE
