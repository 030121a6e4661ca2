#pragma once

#include "trivirus/conditions.hpp"
#include "trivirus/equilibria.hpp"
#include "trivirus/families.hpp"
#include "trivirus/io.hpp"
#include "trivirus/limits.hpp"
#include "trivirus/model.hpp"
#include "trivirus/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace trivirus::scenario {

using io::Json;
using io::SchemaError;

// A family constructor reference. The family supplies the parameters when the
// scenario has no inline params, and is always used to classify limits.
struct FamilySpec {
    enum class Kind { Line, IdenticalPlane, GeneralPlane };
    Kind kind = Kind::Line;
    Matrix b1, m, mHat, b3;  // line: (B1, M, B3); general plane: (B1, M, M^)
    Vector delta;            // identical plane
    Matrix beta;
};

inline const char* toString(FamilySpec::Kind k) {
    switch (k) {
        case FamilySpec::Kind::Line: return "line";
        case FamilySpec::Kind::IdenticalPlane: return "identical-plane";
        case FamilySpec::Kind::GeneralPlane: return "general-plane";
    }
    return "?";
}

struct BuiltFamily {
    std::optional<LineFamily> line;
    std::optional<PlaneFamily> plane;

    TriVirusParams params() const { return line ? line->params() : plane->params; }
};

inline BuiltFamily build(const FamilySpec& f) {
    BuiltFamily out;
    switch (f.kind) {
        case FamilySpec::Kind::Line: out.line = buildLineFamily(f.b1, f.m, f.b3); break;
        case FamilySpec::Kind::IdenticalPlane: out.plane = buildIdenticalPlane(f.delta, f.beta); break;
        case FamilySpec::Kind::GeneralPlane: out.plane = buildGeneralPlane(f.b1, f.m, f.mHat); break;
    }
    return out;
}

struct SimulateItem {
    std::string label;
    std::optional<SystemState> state;   // explicit initial condition
    std::optional<std::uint64_t> seed;  // random initial condition seed; defaults to global seed + item position
    SimConfig config;
};

struct EnumerateItem {
    int starts = 100;
    std::optional<std::uint64_t> seed;
};

struct GenericityItem {
    int trials = 20;
    double scale = 0.05;
    int starts = 40;
    std::optional<std::uint64_t> seed;
};

struct PlanItem {
    enum class Kind { CheckConditions, Enumerate, Simulate, BuildFamily, GenericityProbe };
    Kind kind = Kind::CheckConditions;
    SimulateItem simulate;
    EnumerateItem enumerate;
    GenericityItem genericity;
};

inline const char* toString(PlanItem::Kind k) {
    switch (k) {
        case PlanItem::Kind::CheckConditions: return "check-conditions";
        case PlanItem::Kind::Enumerate: return "enumerate";
        case PlanItem::Kind::Simulate: return "simulate";
        case PlanItem::Kind::BuildFamily: return "build-family";
        case PlanItem::Kind::GenericityProbe: return "genericity-probe";
    }
    return "?";
}

struct Expectation {
    enum class Op { Near, Equals, Range, DiffersFrom, Contains };
    std::string fact;
    Op op = Op::Equals;
    Json value;      // Near, Equals, Contains
    Json tolerance;  // Near; kept as written so the summary can echo it
    std::optional<double> min, max;
    std::string other;  // DiffersFrom: name of the second fact
    double atLeast = 0.0;
};

struct Scenario {
    std::string name = "scenario";
    std::string description;
    std::uint64_t seed = 1;
    std::string output;
    std::optional<TriVirusParams> params;  // inline parameters
    std::optional<FamilySpec> family;
    std::vector<PlanItem> plan;
    std::vector<Expectation> expectations;
};

// ---------------------------------------------------------------- parsing

namespace detail {

inline std::uint64_t parseSeed(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        throw SchemaError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline int parsePositiveInt(const Json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 1 || j.get<long long>() > 1000000)
        throw SchemaError(where + ": expected a positive integer");
    return j.get<int>();
}

inline double parsePositive(const Json& j, const std::string& where) {
    const double v = io::parseScalar(j, where);
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError(where + ": expected a positive number");
    return v;
}

inline FamilySpec parseFamily(const Json& j) {
    const std::string where = "family";
    const Json& kind = io::require(j, "kind", where);
    if (!kind.is_string()) throw SchemaError("family.kind: expected a string");
    FamilySpec f;
    const std::string k = kind.get<std::string>();
    if (k == "line") {
        f.kind = FamilySpec::Kind::Line;
        f.b1 = io::parseMatrix(io::require(j, "B1", where), "family.B1");
        f.m = io::parseMatrix(io::require(j, "M", where), "family.M");
        f.b3 = io::parseMatrix(io::require(j, "B3", where), "family.B3");
    } else if (k == "identical-plane") {
        f.kind = FamilySpec::Kind::IdenticalPlane;
        f.beta = io::parseMatrix(io::require(j, "beta", where), "family.beta");
        f.delta = j.contains("delta") ? io::parseVector(j["delta"], "family.delta") : Vector::Ones(f.beta.rows());
    } else if (k == "general-plane") {
        f.kind = FamilySpec::Kind::GeneralPlane;
        f.b1 = io::parseMatrix(io::require(j, "B1", where), "family.B1");
        f.m = io::parseMatrix(io::require(j, "M", where), "family.M");
        f.mHat = io::parseMatrix(io::require(j, "Mhat", where), "family.Mhat");
    } else {
        throw SchemaError("family.kind: unknown kind '" + k + "' (line, identical-plane, general-plane)");
    }
    return f;
}

inline void parseSimConfig(const Json& j, SimConfig& c, const std::string& where) {
    if (j.contains("horizon")) c.horizon = parsePositive(j["horizon"], where + ".horizon");
    if (j.contains("sampleInterval")) c.sampleInterval = parsePositive(j["sampleInterval"], where + ".sampleInterval");
    if (j.contains("window")) c.window = parsePositive(j["window"], where + ".window");
    if (j.contains("threshold")) c.convergenceThreshold = parsePositive(j["threshold"], where + ".threshold");
    if (j.contains("rtol")) c.rtol = parsePositive(j["rtol"], where + ".rtol");
    if (j.contains("atol")) c.atol = parsePositive(j["atol"], where + ".atol");
}

inline PlanItem parsePlanItem(const Json& j, std::size_t index) {
    const std::string where = "plan[" + std::to_string(index) + "]";
    if (!j.is_object() || !j.contains("do") || !j["do"].is_string())
        throw SchemaError(where + ": expected an object with a string field 'do'");
    const std::string verb = j["do"].get<std::string>();
    PlanItem item;
    if (verb == "check-conditions") {
        item.kind = PlanItem::Kind::CheckConditions;
    } else if (verb == "build-family") {
        item.kind = PlanItem::Kind::BuildFamily;
    } else if (verb == "enumerate") {
        item.kind = PlanItem::Kind::Enumerate;
        if (j.contains("starts")) item.enumerate.starts = parsePositiveInt(j["starts"], where + ".starts");
        if (j.contains("seed")) item.enumerate.seed = parseSeed(j["seed"], where + ".seed");
    } else if (verb == "genericity-probe") {
        item.kind = PlanItem::Kind::GenericityProbe;
        if (j.contains("trials")) item.genericity.trials = parsePositiveInt(j["trials"], where + ".trials");
        if (j.contains("starts")) item.genericity.starts = parsePositiveInt(j["starts"], where + ".starts");
        if (j.contains("scale")) item.genericity.scale = parsePositive(j["scale"], where + ".scale");
        if (j.contains("seed")) item.genericity.seed = parseSeed(j["seed"], where + ".seed");
    } else if (verb == "simulate") {
        item.kind = PlanItem::Kind::Simulate;
        auto& s = item.simulate;
        const Json& label = io::require(j, "label", where);
        if (!label.is_string() || label.get<std::string>().empty() ||
            label.get<std::string>().find_first_of("/\\. ") != std::string::npos)
            throw SchemaError(where + ".label: expected a non-empty name without '/', '\\', '.' or spaces");
        s.label = label.get<std::string>();
        const Json& initial = io::require(j, "initial", where);
        if (initial.contains("state")) {
            s.state = io::parseState(initial["state"], where + ".initial.state");
        } else if (initial.contains("random")) {
            const Json& r = initial["random"];
            if (r.is_boolean()) {
                if (!r.get<bool>()) throw SchemaError(where + ".initial.random: must be true or a seed");
            } else {
                s.seed = parseSeed(r, where + ".initial.random");
            }
        } else {
            throw SchemaError(where + ".initial: expected 'state' or 'random'");
        }
        parseSimConfig(j, s.config, where);
    } else {
        throw SchemaError(where + ".do: unknown action '" + verb + "'");
    }
    return item;
}

inline Expectation parseExpectation(const Json& j, std::size_t index) {
    const std::string where = "expect[" + std::to_string(index) + "]";
    const Json& fact = io::require(j, "fact", where);
    if (!fact.is_string()) throw SchemaError(where + ".fact: expected a string");
    Expectation e;
    e.fact = fact.get<std::string>();
    if (j.contains("value")) {
        e.op = Expectation::Op::Near;
        e.value = j["value"];
        e.tolerance = io::require(j, "tolerance", where);
        io::parseScalar(e.tolerance, where + ".tolerance");
    } else if (j.contains("equals")) {
        e.op = Expectation::Op::Equals;
        e.value = j["equals"];
    } else if (j.contains("contains")) {
        e.op = Expectation::Op::Contains;
        e.value = j["contains"];
    } else if (j.contains("differsFrom")) {
        e.op = Expectation::Op::DiffersFrom;
        if (!j["differsFrom"].is_string()) throw SchemaError(where + ".differsFrom: expected a fact name");
        e.other = j["differsFrom"].get<std::string>();
        e.atLeast = io::parseScalar(io::require(j, "atLeast", where), where + ".atLeast");
    } else if (j.contains("min") || j.contains("max")) {
        e.op = Expectation::Op::Range;
        if (j.contains("min")) e.min = io::parseScalar(j["min"], where + ".min");
        if (j.contains("max")) e.max = io::parseScalar(j["max"], where + ".max");
    } else {
        throw SchemaError(where + ": expected one of value/equals/contains/differsFrom/min/max");
    }
    return e;
}

}  // namespace detail

inline Scenario parseScenario(const Json& j) {
    if (!j.is_object()) throw SchemaError("config: expected a JSON object");
    Scenario s;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw SchemaError("name: expected a string");
        s.name = j["name"].get<std::string>();
    }
    if (j.contains("description")) {
        if (!j["description"].is_string()) throw SchemaError("description: expected a string");
        s.description = j["description"].get<std::string>();
    }
    if (j.contains("seed")) s.seed = detail::parseSeed(j["seed"], "seed");
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw SchemaError("output: expected a string");
        s.output = j["output"].get<std::string>();
    }
    if (j.contains("params")) s.params = io::parseParams(j["params"]);
    if (j.contains("family")) s.family = detail::parseFamily(j["family"]);
    if (!s.params && !s.family) throw SchemaError("config: needs 'params' or 'family'");
    if (j.contains("plan")) {
        if (!j["plan"].is_array()) throw SchemaError("plan: expected an array");
        for (std::size_t i = 0; i < j["plan"].size(); ++i) s.plan.push_back(detail::parsePlanItem(j["plan"][i], i));
    }
    if (j.contains("expect")) {
        if (!j["expect"].is_array()) throw SchemaError("expect: expected an array");
        for (std::size_t i = 0; i < j["expect"].size(); ++i)
            s.expectations.push_back(detail::parseExpectation(j["expect"][i], i));
    }
    std::map<std::string, int> labels;
    for (const auto& item : s.plan)
        if (item.kind == PlanItem::Kind::Simulate && ++labels[item.simulate.label] > 1)
            throw SchemaError("plan: simulate label '" + item.simulate.label + "' is used twice");
    return s;
}

inline Scenario loadScenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parseScenario(j);
}

// ---------------------------------------------------------------- serialization

inline Json toJson(const FamilySpec& f) {
    Json j = {{"kind", toString(f.kind)}};
    switch (f.kind) {
        case FamilySpec::Kind::Line:
            j["B1"] = io::literal(f.b1);
            j["M"] = io::literal(f.m);
            j["B3"] = io::literal(f.b3);
            break;
        case FamilySpec::Kind::IdenticalPlane:
            j["delta"] = io::literal(f.delta);
            j["beta"] = io::literal(f.beta);
            break;
        case FamilySpec::Kind::GeneralPlane:
            j["B1"] = io::literal(f.b1);
            j["M"] = io::literal(f.m);
            j["Mhat"] = io::literal(f.mHat);
            break;
    }
    return j;
}

inline Json toJson(const PlanItem& item) {
    Json j = {{"do", toString(item.kind)}};
    switch (item.kind) {
        case PlanItem::Kind::Enumerate:
            j["starts"] = item.enumerate.starts;
            if (item.enumerate.seed) j["seed"] = *item.enumerate.seed;
            break;
        case PlanItem::Kind::GenericityProbe:
            j["trials"] = item.genericity.trials;
            j["scale"] = item.genericity.scale;
            j["starts"] = item.genericity.starts;
            if (item.genericity.seed) j["seed"] = *item.genericity.seed;
            break;
        case PlanItem::Kind::Simulate: {
            const auto& s = item.simulate;
            j["label"] = s.label;
            if (s.state) {
                Json blocks = Json::array();
                for (int k = 0; k < s.state->viruses(); ++k) blocks.push_back(io::literal(Vector(s.state->block(k))));
                j["initial"] = {{"state", blocks}};
            } else {
                j["initial"] = {{"random", s.seed ? Json(*s.seed) : Json(true)}};
            }
            j["horizon"] = s.config.horizon;
            j["sampleInterval"] = s.config.sampleInterval;
            j["window"] = s.config.window;
            j["threshold"] = s.config.convergenceThreshold;
            break;
        }
        default: break;
    }
    return j;
}

inline Json toJson(const Expectation& e) {
    Json j = {{"fact", e.fact}};
    switch (e.op) {
        case Expectation::Op::Near:
            j["value"] = e.value;
            j["tolerance"] = e.tolerance;
            break;
        case Expectation::Op::Equals: j["equals"] = e.value; break;
        case Expectation::Op::Contains: j["contains"] = e.value; break;
        case Expectation::Op::DiffersFrom:
            j["differsFrom"] = e.other;
            j["atLeast"] = e.atLeast;
            break;
        case Expectation::Op::Range:
            if (e.min) j["min"] = *e.min;
            if (e.max) j["max"] = *e.max;
            break;
    }
    return j;
}

inline Json toJson(const Scenario& s) {
    Json j = {{"name", s.name}, {"description", s.description}, {"seed", s.seed}};
    if (!s.output.empty()) j["output"] = s.output;
    if (s.params) j["params"] = io::toJson(*s.params);
    if (s.family) j["family"] = toJson(*s.family);
    Json plan = Json::array();
    for (const auto& item : s.plan) plan.push_back(toJson(item));
    j["plan"] = plan;
    Json expect = Json::array();
    for (const auto& e : s.expectations) expect.push_back(toJson(e));
    j["expect"] = expect;
    return j;
}

// ---------------------------------------------------------------- running

struct RunOptions {
    std::optional<std::string> outDir;
    std::optional<std::uint64_t> seed;
    bool parallel = false;
    std::ostream* log = nullptr;  // progress lines; null for silence
};

struct ExpectationResult {
    Expectation expectation;
    bool pass = false;
    Json observed;
    std::string detail;
};

struct RunResult {
    std::string outDir;
    Json facts = Json::object();
    std::vector<ExpectationResult> results;

    bool passed() const {
        for (const auto& r : results)
            if (!r.pass) return false;
        return true;
    }
};

inline std::string defaultOutputRoot() {
    const char* env = std::getenv("TRIVIRUS_OUT");
    return env && *env ? env : "out";
}

namespace detail {

inline std::string jsonText(const Json& j) { return j.dump(); }

inline bool numericArray(const Json& j) {
    if (!j.is_array()) return false;
    for (const auto& x : j)
        if (!x.is_number()) return false;
    return true;
}

// Largest entrywise difference of two numbers or two equally long numeric arrays.
inline std::optional<double> maxDifference(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>());
    if (numericArray(a) && numericArray(b) && a.size() == b.size()) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i].get<double>() - b[i].get<double>()));
        return d;
    }
    return std::nullopt;
}

inline ExpectationResult evaluate(const Expectation& e, const Json& facts) {
    ExpectationResult r{e, false, nullptr, {}};
    if (!facts.contains(e.fact)) {
        r.detail = "fact was not produced";
        return r;
    }
    r.observed = facts[e.fact];
    switch (e.op) {
        case Expectation::Op::Near: {
            const double tol = io::parseScalar(e.tolerance, "tolerance");
            const auto d = maxDifference(r.observed, e.value);
            if (!d) {
                r.detail = "observed value is not comparable with " + jsonText(e.value);
                return r;
            }
            r.pass = *d <= tol;
            std::ostringstream os;
            os << "|observed - expected| = " << *d;
            r.detail = os.str();
            break;
        }
        case Expectation::Op::Equals: r.pass = r.observed == e.value; break;
        case Expectation::Op::Contains:
            r.pass = r.observed.is_array() && std::find(r.observed.begin(), r.observed.end(), e.value) != r.observed.end();
            break;
        case Expectation::Op::Range:
            if (!r.observed.is_number()) {
                r.detail = "observed value is not a number";
                return r;
            }
            r.pass = (!e.min || r.observed.get<double>() >= *e.min) && (!e.max || r.observed.get<double>() <= *e.max);
            break;
        case Expectation::Op::DiffersFrom: {
            if (!facts.contains(e.other)) {
                r.detail = "fact " + e.other + " was not produced";
                return r;
            }
            const auto d = maxDifference(r.observed, facts[e.other]);
            if (!d) {
                r.detail = "facts are not comparable";
                return r;
            }
            r.pass = *d >= e.atLeast;
            std::ostringstream os;
            os << "max difference from " << e.other << " = " << *d;
            r.detail = os.str();
            break;
        }
    }
    return r;
}

inline std::string describe(const Expectation& e) {
    switch (e.op) {
        case Expectation::Op::Near:
            return "~= " + jsonText(e.value) + " (tolerance " + jsonText(e.tolerance) + ")";
        case Expectation::Op::Equals: return "== " + jsonText(e.value);
        case Expectation::Op::Contains: return "contains " + jsonText(e.value);
        case Expectation::Op::DiffersFrom: {
            std::ostringstream os;
            os << "differs from " << e.other << " by >= " << e.atLeast;
            return os.str();
        }
        case Expectation::Op::Range: {
            std::ostringstream os;
            os << "in [" << (e.min ? io::decimal(*e.min) : "-inf") << ", " << (e.max ? io::decimal(*e.max) : "inf")
               << "]";
            return os.str();
        }
    }
    return "?";
}

inline void writeJson(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << io::pretty(j);
}

inline double blockMax(const SystemState& s, int k) { return s.block(k).maxCoeff(); }

class Runner {
public:
    Runner(const Scenario& s, const RunOptions& opt) : s_(s), opt_(opt) {
        seed_ = opt.seed.value_or(s.seed);
        if (s.family) family_ = build(*s.family);
        if (s.params) {
            params_ = *s.params;
            if (family_) requireFamilyMatches();
        } else {
            params_ = family_->params();
        }
        std::filesystem::path out = opt.outDir ? *opt.outDir
                                    : !s.output.empty() ? s.output
                                                        : (std::filesystem::path(defaultOutputRoot()) / s.name).string();
        out_ = out;
        std::filesystem::create_directories(out_);
        for (int k = 0; k < params_.viruses(); ++k) {
            SystemState st(params_.nodes(), params_.viruses());
            if (k == 0) baseline_.push_back(certify(params_, st));
            if (const auto x = singleVirusEquilibrium(params_, k)) {
                st.block(k) = *x;
                baseline_.push_back(certify(params_, st));
            }
        }
    }

    RunResult run() {
        RunResult result;
        result.outDir = out_.string();
        io::Json paramsDoc = io::toJson(params_);
        if (s_.family) paramsDoc["family"] = toJson(*s_.family);
        writeJson(out_ / "params.json", paramsDoc);
        facts_["nodes"] = params_.nodes();
        facts_["viruses"] = params_.viruses();

        if (opt_.parallel) prefetchTrajectories();
        for (std::size_t i = 0; i < s_.plan.size(); ++i) {
            const PlanItem& item = s_.plan[i];
            if (opt_.log) *opt_.log << "[" << s_.name << "] " << toString(item.kind)
                                    << (item.kind == PlanItem::Kind::Simulate ? " " + item.simulate.label : "") << '\n';
            switch (item.kind) {
                case PlanItem::Kind::CheckConditions: checkConditionsItem(); break;
                case PlanItem::Kind::Enumerate: enumerateItem(item.enumerate, i); break;
                case PlanItem::Kind::Simulate: simulateItem(item.simulate, i); break;
                case PlanItem::Kind::BuildFamily: buildFamilyItem(); break;
                case PlanItem::Kind::GenericityProbe: genericityItem(item.genericity, i); break;
            }
        }

        result.facts = facts_;
        for (const auto& e : s_.expectations) result.results.push_back(evaluate(e, facts_));
        writeSummary(result);
        return result;
    }

    const TriVirusParams& params() const { return params_; }

private:
    void requireFamilyMatches() const {
        const TriVirusParams fp = family_->params();
        bool ok = fp.nodes() == params_.nodes() && fp.viruses() == params_.viruses();
        for (int k = 0; ok && k < fp.viruses(); ++k)
            ok = (fp.beta(k) - params_.beta(k)).lpNorm<Eigen::Infinity>() <= 1e-9 &&
                 (fp.delta(k) - params_.delta(k)).lpNorm<Eigen::Infinity>() <= 1e-9;
        if (!ok) throw SchemaError("family: the family constructor does not reproduce the inline params");
    }

    std::uint64_t itemSeed(std::optional<std::uint64_t> explicitSeed, std::size_t index) const {
        return explicitSeed.value_or(seed_ + index);
    }

    SystemState initialState(const SimulateItem& item, std::size_t index) const {
        if (item.state) {
            if (item.state->nodes() != params_.nodes() || item.state->viruses() != params_.viruses())
                throw SchemaError("simulate " + item.label + ": initial state has the wrong shape");
            if (!validateState(*item.state).empty())
                throw SchemaError("simulate " + item.label + ": initial state lies outside the domain");
            return *item.state;
        }
        return randomInteriorStart(params_.nodes(), itemSeed(item.seed, index), params_.viruses());
    }

    void prefetchTrajectories() {
        std::vector<std::future<Trajectory>> jobs;
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < s_.plan.size(); ++i) {
            if (s_.plan[i].kind != PlanItem::Kind::Simulate) continue;
            const SimulateItem& item = s_.plan[i].simulate;
            const SystemState x0 = initialState(item, i);
            jobs.push_back(std::async(std::launch::async, [this, x0, cfg = item.config] { return integrate(params_, x0, cfg); }));
            indices.push_back(i);
        }
        for (std::size_t j = 0; j < jobs.size(); ++j) prefetched_[indices[j]] = jobs[j].get();
    }

    void checkConditionsItem() {
        for (int k = 0; k < params_.viruses(); ++k) {
            const auto x = singleVirusEquilibrium(params_, k);
            facts_["single." + std::to_string(k + 1)] = x ? io::toJson(*x) : Json(nullptr);
        }
        const ConditionReport rep = checkConditions(params_, enumeration_ ? &*enumeration_ : nullptr);
        writeJson(out_ / "conditions.json", io::toJson(rep));
        for (const auto& r : rep.records) {
            if (r.check == "dfe-stability") {
                facts_["dfe.verdict"] = r.verdict;
                for (int k = 0; k < params_.viruses(); ++k)
                    facts_["dfe.abscissa." + std::to_string(k + 1)] = io::number(r.witnesses[k].value);
            } else if (r.check.rfind("boundary-stability(", 0) == 0) {
                const std::string k = r.check.substr(19, r.check.size() - 20);
                facts_["boundary." + k + ".verdict"] = r.verdict;
                std::size_t w = 0;
                for (int j = 1; j <= params_.viruses(); ++j)
                    if (std::to_string(j) != k) facts_["boundary." + k + ".radius." + std::to_string(j)] = r.witnesses[w++].value;
            } else if (r.check == "nonexistence-3-coexistence" || r.check == "nonexistence-2-coexistence") {
                const std::string key = r.check == "nonexistence-3-coexistence" ? "nonexistence3" : "nonexistence2";
                facts_[key + ".holds"] = r.hypothesisHolds;
                facts_[key + ".verdict"] = r.verdict;
                facts_[key + ".permutation"] = r.permutation ? Json(*r.permutation) : Json(nullptr);
                facts_[key + ".conclusions"] = r.conclusions;
            } else if (r.check == "saturated-existence") {
                facts_["saturated.verdict"] = r.verdict;
                facts_["saturated.hypothesisHolds"] = r.hypothesisHolds;
            }
        }
    }

    void enumerateItem(const EnumerateItem& item, std::size_t index) {
        EnumerationOptions eo;
        eo.starts = item.starts;
        eo.seed = itemSeed(item.seed, index);
        if (opt_.parallel) eo.threads = std::max(1u, std::thread::hardware_concurrency());
        enumeration_ = enumerateEquilibria(params_, eo);
        const EnumerationResult& e = *enumeration_;
        writeJson(out_ / "enumeration.json", io::toJson(e));
        facts_["enumeration.count"] = static_cast<int>(e.equilibria.size());
        Json labels = Json::array(), stable = Json::array();
        std::map<std::string, int> byKind, saturatedByKind;
        for (auto kind : {EquilibriumKind::DiseaseFree, EquilibriumKind::Boundary, EquilibriumKind::TwoCoexistence,
                          EquilibriumKind::ThreeCoexistence})
            byKind[trivirus::toString(kind)] = saturatedByKind[trivirus::toString(kind)] = 0;
        for (const auto& eq : e.equilibria) {
            labels.push_back(eq.label());
            if (eq.isStable) stable.push_back(eq.label());
            ++byKind[trivirus::toString(eq.kind)];
            if (eq.isSaturated) ++saturatedByKind[trivirus::toString(eq.kind)];
        }
        for (const auto& [kind, c] : byKind) facts_["enumeration.count." + kind] = c;
        for (const auto& [kind, c] : saturatedByKind) facts_["enumeration.saturated." + kind] = c;
        facts_["enumeration.labels"] = labels;
        facts_["enumeration.stable"] = stable;
        facts_["enumeration.nondegenerate"] = e.nondegenerate;
        facts_["enumeration.complete"] = e.complete;
        facts_["enumeration.indexSumSaturated"] = e.indexSumSaturated;
        facts_["enumeration.continua"] = static_cast<int>(e.continua.size());
        Json cont = Json::array();
        for (const auto& c : e.continua) cont.push_back(supportLabel(c.support));
        facts_["enumeration.continuaLabels"] = cont;
    }

    void simulateItem(const SimulateItem& item, std::size_t index) {
        Trajectory traj;
        if (auto it = prefetched_.find(index); it != prefetched_.end()) traj = std::move(it->second);
        else traj = integrate(params_, initialState(item, index), item.config);

        std::ofstream csv(out_ / (item.label + ".csv"));
        if (!csv) throw Error("cannot write " + (out_ / (item.label + ".csv")).string());
        writeCsv(csv, traj);

        const std::string key = "sim." + item.label + ".";
        const SystemState& xf = traj.finalState();
        facts_[key + "termination"] = toString(traj.termination);
        facts_[key + "finalTime"] = traj.finalTime();
        facts_[key + "finalDerivative"] = traj.finalDerivativeNorm;
        facts_[key + "finalState"] = io::toJson(xf);
        for (int k = 0; k < params_.viruses(); ++k) facts_[key + "blockMax." + std::to_string(k + 1)] = blockMax(xf, k);

        if (traj.termination == Termination::Converged) {
            KnownLimits known;
            known.equilibria = enumeration_ ? enumeration_->equilibria : baseline_;
            known.equilibria.insert(known.equilibria.end(), discovered_.begin(), discovered_.end());
            if (family_) {
                known.line = family_->line;
                known.plane = family_->plane;
            }
            LimitClassification c = classifyLimit(traj, known);
            std::optional<Equilibrium> eq;
            if (c.target == LimitClassification::Target::Equilibrium) eq = known.equilibria[c.equilibriumIndex];
            if (c.target == LimitClassification::Target::Novel) eq = polish(xf, c);
            traj.limit = c;
            facts_[key + "limit"] = c.label;
            facts_[key + "distance"] = io::number(c.distance);
            if (!c.coordinates.empty()) {
                facts_[key + "coordinates"] = c.coordinates;
                double sum = 0.0;
                for (double v : c.coordinates) sum += v;
                facts_[key + "coordinateSum"] = sum;
            }
            if (eq) {
                facts_[key + "limitStable"] = eq->isStable;
                facts_[key + "limitAbscissa"] = eq->stabilityAbscissa;
                facts_[key + "limitSaturated"] = eq->isSaturated;
            }
        } else {
            facts_[key + "limit"] = nullptr;
        }
        trajectories_[item.label] = io::summaryJson(traj);
    }

    // A converged limit that matches nothing known: Newton-polish it on its
    // numerical support and certify the result.
    std::optional<Equilibrium> polish(const SystemState& xf, LimitClassification& c) {
        Support support(params_.viruses(), false);
        for (int k = 0; k < params_.viruses(); ++k) support[k] = blockMax(xf, k) > 1e-6;
        const auto root = solveRestricted(params_, support, xf.stacked());
        if (!root) return std::nullopt;
        Equilibrium eq = certify(params_, SystemState::fromStacked(*root, params_.viruses()));
        const double d = (eq.state.stacked() - xf.stacked()).lpNorm<Eigen::Infinity>();
        if (!(d <= novelLimitDistance)) return std::nullopt;
        c = {LimitClassification::Target::Equilibrium, eq.label(), -1, d, {}};
        discovered_.push_back(eq);
        return eq;
    }

    void buildFamilyItem() {
        if (!family_) throw SchemaError("build-family: the config has no 'family'");
        Json doc = family_->line ? io::toJson(*family_->line) : io::toJson(*family_->plane);
        writeJson(out_ / "family.json", doc);
        facts_["family.kind"] = toString(s_.family->kind);
        facts_["family.maxResidual"] = doc["maxResidual"];
        if (family_->line) {
            facts_["family.z"] = io::toJson(family_->line->z);
            facts_["family.radius"] = family_->line->radius;
            facts_["family.abscissa"] = family_->line->abscissa;
            facts_["family.attractivity"] = toString(family_->line->attractivity);
        } else {
            facts_["family.anchor"] = io::toJson(family_->plane->anchor);
        }
    }

    void genericityItem(const GenericityItem& item, std::size_t index) {
        const GenericityReport rep =
            genericityProbe(params_, item.trials, item.scale, itemSeed(item.seed, index), item.starts);
        Json hist = Json::object();
        for (const auto& [count, trials] : rep.countHistogram) hist[std::to_string(count)] = trials;
        writeJson(out_ / "genericity.json", {{"trials", rep.trials},
                                             {"scale", item.scale},
                                             {"degenerateTrials", rep.degenerateTrials},
                                             {"continuumTrials", rep.continuumTrials},
                                             {"degenerateFraction", rep.degenerateFraction},
                                             {"counts", rep.counts},
                                             {"countHistogram", hist}});
        facts_["genericity.trials"] = rep.trials;
        facts_["genericity.degenerateTrials"] = rep.degenerateTrials;
        facts_["genericity.continuumTrials"] = rep.continuumTrials;
        facts_["genericity.degenerateFraction"] = rep.degenerateFraction;
    }

    void writeSummary(const RunResult& result) const {
        Json expectations = Json::array();
        std::ostringstream text;
        text << "scenario " << s_.name << " (seed " << seed_ << ")\n";
        if (!s_.description.empty()) text << s_.description << '\n';
        int failed = 0;
        for (const auto& r : result.results) {
            Json e = toJson(r.expectation);
            e["observed"] = r.observed;
            e["pass"] = r.pass;
            if (!r.detail.empty()) e["detail"] = r.detail;
            expectations.push_back(e);
            if (!r.pass) ++failed;
            text << (r.pass ? "[PASS] " : "[FAIL] ") << r.expectation.fact << ' ' << describe(r.expectation)
                 << "; observed " << r.observed.dump();
            if (!r.detail.empty()) text << "; " << r.detail;
            text << '\n';
        }
        text << result.results.size() - failed << '/' << result.results.size() << " expectations passed\n";
        writeJson(out_ / "summary.json", {{"name", s_.name},
                                          {"description", s_.description},
                                          {"seed", seed_},
                                          {"passed", failed == 0},
                                          {"expectations", expectations},
                                          {"facts", facts_},
                                          {"trajectories", trajectories_}});
        std::ofstream(out_ / "summary.txt") << text.str();
    }

    const Scenario& s_;
    RunOptions opt_;
    std::uint64_t seed_ = 1;
    TriVirusParams params_;
    std::optional<BuiltFamily> family_;
    std::filesystem::path out_;
    std::vector<Equilibrium> baseline_;
    std::vector<Equilibrium> discovered_;
    std::optional<EnumerationResult> enumeration_;
    std::map<std::size_t, Trajectory> prefetched_;
    Json facts_ = Json::object();
    Json trajectories_ = Json::object();
};

}  // namespace detail

// Executes the plan in order. Schema problems raise SchemaError; failures in
// the numerical modules propagate with their original type.
inline RunResult runScenario(const Scenario& s, const RunOptions& opt = {}) {
    detail::Runner runner(s, opt);
    return runner.run();
}

inline std::string formatSummary(const RunResult& r) {
    std::ifstream in(std::filesystem::path(r.outDir) / "summary.txt");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace trivirus::scenario
