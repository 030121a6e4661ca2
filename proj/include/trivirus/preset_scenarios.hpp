#pragma once

#include "trivirus/presets.hpp"
#include "trivirus/scenario.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace trivirus::scenario {

namespace detail {

inline Expectation near(std::string fact, Json value, double tolerance) {
    Expectation e;
    e.fact = std::move(fact);
    e.op = Expectation::Op::Near;
    e.value = std::move(value);
    e.tolerance = tolerance;
    return e;
}

inline Expectation equals(std::string fact, Json value) {
    Expectation e;
    e.fact = std::move(fact);
    e.op = Expectation::Op::Equals;
    e.value = std::move(value);
    return e;
}

inline Expectation within(std::string fact, std::optional<double> min, std::optional<double> max) {
    Expectation e;
    e.fact = std::move(fact);
    e.op = Expectation::Op::Range;
    e.min = min;
    e.max = max;
    return e;
}

inline Expectation differs(std::string fact, std::string other, double atLeast) {
    Expectation e;
    e.fact = std::move(fact);
    e.op = Expectation::Op::DiffersFrom;
    e.other = std::move(other);
    e.atLeast = atLeast;
    return e;
}

inline PlanItem action(PlanItem::Kind kind) {
    PlanItem p;
    p.kind = kind;
    return p;
}

inline PlanItem enumerateAction(int starts) {
    PlanItem p = action(PlanItem::Kind::Enumerate);
    p.enumerate.starts = starts;
    return p;
}

inline PlanItem simulateAction(std::string label, double horizon, std::optional<SystemState> state = std::nullopt) {
    PlanItem p = action(PlanItem::Kind::Simulate);
    p.simulate.label = std::move(label);
    p.simulate.state = std::move(state);
    p.simulate.config.horizon = horizon;
    return p;
}

inline FamilySpec lineSpec(const TriVirusParams& p) {
    FamilySpec f;
    f.kind = FamilySpec::Kind::Line;
    f.b1 = p.beta(0);
    f.m = p.beta(1);
    f.b3 = p.beta(2);
    return f;
}

inline void expectLimit(Scenario& s, const std::string& label, const std::string& limit) {
    s.expectations.push_back(equals("sim." + label + ".termination", "converged"));
    s.expectations.push_back(equals("sim." + label + ".limit", limit));
}

inline Scenario example1() {
    Scenario s;
    s.name = "example1";
    s.description = "4-node system with all three viruses above threshold; boundary equilibrium (x1,0,0) is the only "
                    "stable one and attracts the random interior start.";
    s.params = presets::example1();
    s.plan = {action(PlanItem::Kind::CheckConditions), simulateAction("random", 20000.0)};
    const std::vector<std::pair<std::string, double>> radii{{"boundary.1.radius.2", 0.9829}, {"boundary.1.radius.3", 0.99624},
                                                            {"boundary.2.radius.1", 1.0174}, {"boundary.2.radius.3", 1.0127},
                                                            {"boundary.3.radius.1", 1.003},  {"boundary.3.radius.2", 0.9863}};
    for (const auto& [fact, v] : radii) s.expectations.push_back(near(fact, v, 5e-4));
    s.expectations.push_back(equals("boundary.1.verdict", "stable"));
    s.expectations.push_back(equals("boundary.2.verdict", "unstable"));
    s.expectations.push_back(equals("boundary.3.verdict", "unstable"));
    expectLimit(s, "random", "boundary(1)");
    return s;
}

inline Scenario example2() {
    Scenario s;
    s.name = "example2";
    s.description = "4-node line construction with rho((I-Z)B3) > 1: the line of equilibria repels and the random "
                    "start converges to (0,0,x3).";
    s.params = presets::example2();
    s.family = lineSpec(*s.params);
    s.plan = {action(PlanItem::Kind::BuildFamily), action(PlanItem::Kind::CheckConditions), simulateAction("random", 40000.0)};
    s.expectations = {near("family.radius", 1.0043, 5e-4), equals("family.attractivity", "unstable"),
                      near("family.z", Json::array({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3}), 1e-10),
                      equals("boundary.3.verdict", "stable")};
    expectLimit(s, "random", "boundary(3)");
    return s;
}

inline Scenario example3() {
    Scenario s;
    s.name = "example3";
    s.description = "4-node line construction with rho((I-Z)B3) < 1: the random start converges to a point on the "
                    "line of 2-coexistence equilibria.";
    s.params = presets::example3();
    s.family = lineSpec(*s.params);
    s.plan = {action(PlanItem::Kind::BuildFamily), simulateAction("random", 20000.0)};
    s.expectations = {near("family.radius", 0.9911, 5e-4), equals("family.attractivity", "attractive"),
                      near("family.z", Json::array({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3}), 1e-10)};
    expectLimit(s, "random", "line");
    s.expectations.push_back(within("sim.random.distance", std::nullopt, 1e-6));
    return s;
}

inline Scenario example4() {
    Scenario s;
    s.name = "example4";
    s.description = "4-node plane construction with C and C^ from different patterns: random starts converge to "
                    "different points of a plane of 3-coexistence equilibria; enumeration flags the continuum.";
    s.params = presets::example4();
    FamilySpec f;
    f.kind = FamilySpec::Kind::GeneralPlane;
    f.b1 = presets::fourNodeB1();
    f.m = presets::fourNodeB2(0.0);
    f.mHat = presets::fourNodeB3(0, 0, 0);
    s.family = f;
    s.plan = {action(PlanItem::Kind::BuildFamily), enumerateAction(20), simulateAction("a", 20000.0),
              simulateAction("b", 20000.0)};
    s.expectations = {within("enumeration.continua", 1, std::nullopt)};
    for (const char* l : {"a", "b"}) {
        expectLimit(s, l, "plane");
        s.expectations.push_back(within(std::string("sim.") + l + ".distance", std::nullopt, 1e-6));
        s.expectations.push_back(near(std::string("sim.") + l + ".coordinateSum", 1.0, 1e-6));
    }
    s.expectations.push_back(differs("sim.a.coordinates", "sim.b.coordinates", 1e-3));
    return s;
}

inline Scenario example5() {
    Scenario s;
    s.name = "example5";
    s.description = "Three identical viruses on the 5-node network: two random starts converge to two distinct "
                    "points of the plane spanned by the single-virus equilibrium.";
    FamilySpec f;
    f.kind = FamilySpec::Kind::IdenticalPlane;
    f.delta = Vector::Ones(5);
    f.beta = presets::fiveNodeB();
    s.family = f;
    s.plan = {action(PlanItem::Kind::BuildFamily), action(PlanItem::Kind::CheckConditions), simulateAction("a", 2000.0),
              simulateAction("b", 2000.0)};
    s.expectations = {near("single.1", Json::array({0.691, 0.610, 0.758, 0.078, 0.051}), 5e-4)};
    for (const char* l : {"a", "b"}) {
        expectLimit(s, l, "plane");
        s.expectations.push_back(within(std::string("sim.") + l + ".distance", std::nullopt, 1e-6));
        s.expectations.push_back(near(std::string("sim.") + l + ".coordinateSum", 1.0, 1e-6));
    }
    s.expectations.push_back(differs("sim.a.coordinates", "sim.b.coordinates", 1e-3));
    return s;
}

inline Scenario example6() {
    Scenario s;
    s.name = "example6";
    s.description = "5-node system with N3 > N2 > N1: no 3-coexistence equilibrium exists and the random start "
                    "converges to (0,0,x3).";
    s.params = presets::example6();
    s.plan = {action(PlanItem::Kind::CheckConditions), enumerateAction(200), simulateAction("random", 5000.0)};
    s.expectations = {equals("nonexistence3.holds", true), equals("nonexistence3.permutation", Json::array({1, 2, 3})),
                      equals("enumeration.count.3-coexistence", 0)};
    expectLimit(s, "random", "boundary(3)");
    return s;
}

inline Scenario example7() {
    Scenario s;
    s.name = "example7";
    s.description = "5-node system with N2 > N1 and N3 > N1 but N2, N3 incomparable: virus 1 dies out and the "
                    "random start converges to a 2-coexistence equilibrium of viruses 2 and 3.";
    s.params = presets::example7();
    s.plan = {action(PlanItem::Kind::CheckConditions), enumerateAction(100), simulateAction("random", 20000.0)};
    s.expectations = {equals("nonexistence2.holds", true), equals("nonexistence3.holds", false)};
    expectLimit(s, "random", "2-coexistence(2,3)");
    s.expectations.push_back(within("sim.random.blockMax.1", std::nullopt, 1e-8));
    return s;
}

inline Scenario example8() {
    Scenario s;
    s.name = "example8";
    s.description = "5-node system where every boundary equilibrium is unstable and no 2-coexistence equilibrium is "
                    "saturated, so an odd number of saturated 3-coexistence equilibria must exist and the random "
                    "start converges to a 3-coexistence equilibrium.";
    s.params = presets::example8();
    s.plan = {action(PlanItem::Kind::Enumerate), action(PlanItem::Kind::CheckConditions), simulateAction("random", 20000.0)};
    s.plan[0].enumerate.starts = 100;
    s.expectations = {equals("boundary.1.verdict", "unstable"), equals("boundary.2.verdict", "unstable"),
                      equals("boundary.3.verdict", "unstable"), equals("saturated.hypothesisHolds", true),
                      equals("saturated.verdict", "corollary-confirmed"),
                      within("enumeration.count.3-coexistence", 1, std::nullopt),
                      within("enumeration.saturated.3-coexistence", 1, std::nullopt)};
    expectLimit(s, "random", "3-coexistence(1,2,3)");
    return s;
}

inline Scenario example9() {
    Scenario s;
    s.name = "example9";
    s.description = "Two weakly coupled 2-node communities: depending on the initial condition, two different "
                    "locally stable 2-coexistence equilibria attract the trajectory.";
    s.params = presets::example9();
    const auto ics = presets::example9InitialConditions();
    s.plan = {action(PlanItem::Kind::CheckConditions), enumerateAction(100), simulateAction("virus1-heavy", 5000.0, ics[0]),
              simulateAction("virus2-heavy", 5000.0, ics[1])};
    expectLimit(s, "virus1-heavy", "2-coexistence(1,3)");
    expectLimit(s, "virus2-heavy", "2-coexistence(2,3)");
    for (const char* l : {"virus1-heavy", "virus2-heavy"}) {
        s.expectations.push_back(equals(std::string("sim.") + l + ".limitStable", true));
        s.expectations.push_back(within(std::string("sim.") + l + ".limitAbscissa", std::nullopt, -1e-8));
    }
    return s;
}

}  // namespace detail

struct PresetInfo {
    std::string name;
    std::string description;
};

inline const std::vector<std::pair<std::string, std::function<Scenario()>>>& presetTable() {
    static const std::vector<std::pair<std::string, std::function<Scenario()>>> table{
        {"example1", detail::example1}, {"example2", detail::example2}, {"example3", detail::example3},
        {"example4", detail::example4}, {"example5", detail::example5}, {"example6", detail::example6},
        {"example7", detail::example7}, {"example8", detail::example8}, {"example9", detail::example9}};
    return table;
}

inline std::vector<PresetInfo> listPresets() {
    std::vector<PresetInfo> out;
    for (const auto& [name, make] : presetTable()) out.push_back({name, make().description});
    return out;
}

inline Scenario presetScenario(const std::string& name) {
    for (const auto& [n, make] : presetTable())
        if (n == name) return make();
    throw SchemaError("unknown preset '" + name + "' (see list-presets)");
}

}  // namespace trivirus::scenario
