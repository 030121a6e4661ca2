#include "catch_amalgamated.hpp"

#include "trivirus/preset_scenarios.hpp"
#include "trivirus/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace trivirus;
using namespace trivirus::scenario;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "trivirus-tests" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunOptions quietTo(const fs::path& p) {
    RunOptions o;
    o.outDir = p.string();
    return o;
}

std::string schemaMessage(const Json& j) {
    try {
        parseScenario(j);
    } catch (const SchemaError& e) {
        return e.what();
    }
    return "";
}

const Json twoNodeParams = Json::parse(R"({"viruses": [
    {"beta": [["2", "1"], ["1", "2"]]},
    {"beta": [["1.5", "1"], ["1", "1.5"]]},
    {"beta": [[1, 1], [1, 1]]}]})");

Json withParams(const char* rest) {
    Json j = Json::parse(rest);
    j["params"] = twoNodeParams;
    return j;
}

}  // namespace

TEST_CASE("presets are listed with descriptions") {
    const auto list = listPresets();
    REQUIRE(list.size() == 9);
    for (int i = 0; i < 9; ++i) CHECK(list[i].name == "example" + std::to_string(i + 1));
    CHECK(list[7].description.find("3-coexistence") != std::string::npos);
    CHECK_THROWS_AS(presetScenario("example10"), SchemaError);
}

TEST_CASE("preset matrices round-trip through the config format bit-exactly") {
    for (const auto& info : listPresets()) {
        const Scenario s = presetScenario(info.name);
        const Scenario back = parseScenario(Json::parse(toJson(s).dump()));
        REQUIRE(back.plan.size() == s.plan.size());
        REQUIRE(back.expectations.size() == s.expectations.size());
        if (s.params) {
            REQUIRE(back.params);
            for (int k = 0; k < 3; ++k) {
                CHECK(back.params->beta(k) == s.params->beta(k));
                CHECK(back.params->delta(k) == s.params->delta(k));
            }
        }
        if (s.family) {
            REQUIRE(back.family);
            CHECK(back.family->b1 == s.family->b1);
            CHECK(back.family->m == s.family->m);
            CHECK(back.family->beta == s.family->beta);
        }
        CHECK(toJson(back) == toJson(s));
    }
}

TEST_CASE("schema errors name the offending field") {
    CHECK(schemaMessage(Json::array()) == "config: expected a JSON object");
    CHECK(schemaMessage(Json::object()).find("'params' or 'family'") != std::string::npos);

    Json j = withParams("{}");
    j["params"]["viruses"][1]["beta"][0][1] = "one";
    CHECK(schemaMessage(j).find("params.viruses[1].beta[0][1]") != std::string::npos);

    j = withParams(R"({"plan": [{"do": "fly"}]})");
    CHECK(schemaMessage(j).find("plan[0].do") != std::string::npos);

    j = withParams(R"({"plan": [{"do": "simulate", "label": "a"}]})");
    CHECK(schemaMessage(j).find("plan[0]: missing field 'initial'") != std::string::npos);

    j = withParams(R"({"plan": [{"do": "enumerate", "starts": -3}]})");
    CHECK(schemaMessage(j).find("plan[0].starts") != std::string::npos);

    j = withParams(R"({"expect": [{"fact": "x", "value": 1}]})");
    CHECK(schemaMessage(j).find("expect[0]: missing field 'tolerance'") != std::string::npos);

    j = withParams(R"({"family": {"kind": "torus"}})");
    CHECK(schemaMessage(j).find("family.kind") != std::string::npos);

    j = withParams("{}");
    j["params"]["viruses"][0]["beta"][1] = Json::array({"1"});
    CHECK(schemaMessage(j).find("rows differ in length") != std::string::npos);

    j = withParams("{}");
    j["params"]["viruses"][0]["delta"] = Json::array({"1", "-1"});
    CHECK(schemaMessage(j).find("non-positive healing rate") != std::string::npos);
}

TEST_CASE("an empty plan only echoes the validated params") {
    const fs::path out = scratch("empty");
    const Scenario s = parseScenario(withParams(R"({"name": "empty"})"));
    const auto r = runScenario(s, quietTo(out));
    CHECK(r.passed());
    CHECK(fs::exists(out / "params.json"));
    CHECK(fs::exists(out / "summary.json"));
    CHECK_FALSE(fs::exists(out / "conditions.json"));
    const auto echoed = io::parseParams(Json::parse(slurp(out / "params.json")));
    CHECK(echoed.beta(2) == Matrix::Ones(2, 2));
}

TEST_CASE("family-only configs take their parameters from the constructor") {
    const fs::path out = scratch("family");
    Scenario s = presetScenario("example5");
    REQUIRE_FALSE(s.params);
    s.plan.resize(1);  // build-family only
    s.expectations.clear();
    const auto r = runScenario(s, quietTo(out));
    CHECK(r.facts["family.kind"] == "identical-plane");
    CHECK(fs::exists(out / "family.json"));
}

TEST_CASE("a family that contradicts the inline params is rejected") {
    Scenario s = presetScenario("example2");
    s.family->b3 = presets::fourNodeB3(0.0, 0.0, 0.0);
    CHECK_THROWS_AS(runScenario(s, quietTo(scratch("contradict"))), SchemaError);
}

TEST_CASE("same config and seed give byte-identical CSV, also under --parallel") {
    const Scenario s = presetScenario("example5");
    const fs::path a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
    runScenario(s, quietTo(a));
    runScenario(s, quietTo(b));
    RunOptions par = quietTo(c);
    par.parallel = true;
    runScenario(s, par);
    for (const char* f : {"a.csv", "b.csv"}) {
        const std::string ref = slurp(a / f);
        CHECK_FALSE(ref.empty());
        CHECK(ref == slurp(b / f));
        CHECK(ref == slurp(c / f));
    }
    CHECK(slurp(a / "a.csv") != slurp(a / "b.csv"));

    const fs::path d = scratch("det-d");
    RunOptions other = quietTo(d);
    other.seed = 99;
    runScenario(s, other);
    CHECK(slurp(a / "a.csv") != slurp(d / "a.csv"));
}

TEST_CASE("Example 1 preset reports the radii and the limit") {
    const auto r = runScenario(presetScenario("example1"), quietTo(scratch("ex1")));
    CHECK(r.passed());
    CHECK(r.facts["sim.random.limit"] == "boundary(1)");
    CHECK(std::abs(r.facts["boundary.2.radius.1"].get<double>() - 1.0174) < 5e-4);
}

TEST_CASE("Example 5 preset recovers two distinct plane points") {
    const auto r = runScenario(presetScenario("example5"), quietTo(scratch("ex5")));
    CHECK(r.passed());
    const auto a = r.facts["sim.a.coordinates"], b = r.facts["sim.b.coordinates"];
    double diff = 0.0;
    for (int i = 0; i < 3; ++i) diff = std::max(diff, std::abs(a[i].get<double>() - b[i].get<double>()));
    CHECK(diff > 1e-3);
}

TEST_CASE("expectation operators") {
    const fs::path out = scratch("ops");
    const Json j = withParams(R"({
        "name": "ops",
        "plan": [{"do": "check-conditions"}],
        "expect": [
            {"fact": "nodes", "equals": 2},
            {"fact": "dfe.verdict", "equals": "DFE-unstable"},
            {"fact": "single.1", "value": [0.6667, 0.6667], "tolerance": "1e-3"},
            {"fact": "single.1", "differsFrom": "single.2", "atLeast": 0.05},
            {"fact": "boundary.1.radius.2", "min": 0.0, "max": 1.0},
            {"fact": "nonexistence3.conclusions", "contains": "no 3-coexistence equilibrium"},
            {"fact": "missing.fact", "equals": 1}]})");
    const auto r = runScenario(parseScenario(j), quietTo(out));
    REQUIRE(r.results.size() == 7);
    for (int i = 0; i < 6; ++i) CHECK(r.results[i].pass);
    CHECK_FALSE(r.results[6].pass);
    CHECK(r.results[6].detail == "fact was not produced");
    CHECK_FALSE(r.passed());
    const std::string text = slurp(out / "summary.txt");
    CHECK(text.find("(tolerance \"1e-3\")") != std::string::npos);
    CHECK(text.find("6/7 expectations passed") != std::string::npos);
}
