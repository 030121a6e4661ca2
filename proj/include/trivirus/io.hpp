#pragma once

#include "trivirus/conditions.hpp"
#include "trivirus/equilibria.hpp"
#include "trivirus/families.hpp"
#include "trivirus/model.hpp"
#include "trivirus/sim.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace trivirus::io {

using Json = nlohmann::ordered_json;

class SchemaError : public Error {
public:
    using Error::Error;
};

// Non-finite doubles have no JSON literal; they are written as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json toJson(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

inline Json toJson(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(toJson(Vector(m.row(i).transpose())));
    return rows;
}

// Config literals: the shortest decimal string that parses back to the same double.
inline std::string decimal(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline Json literal(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(decimal(v[i]));
    return a;
}

inline Json literal(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(literal(Vector(m.row(i).transpose())));
    return rows;
}

// Accepts a JSON number or a decimal string.
inline double parseScalar(const Json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == s.size() && used > 0) return v;
    }
    throw SchemaError(where + ": expected a number or decimal string");
}

inline Vector parseVector(const Json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = parseScalar(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

inline Matrix parseMatrix(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = parseVector(j[i], where + "[" + std::to_string(i) + "]");
        if (static_cast<std::size_t>(row.size()) != cols) throw SchemaError(where + ": rows differ in length");
        m.row(i) = row.transpose();
    }
    return m;
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    return j.at(key);
}

// Two-space indented JSON in which arrays of scalars stay on one line, so
// matrices read as one row per line.
inline void pretty(std::ostream& os, const Json& j, int indent = 0) {
    const std::string pad(static_cast<std::size_t>(indent) + 2, ' '), close(static_cast<std::size_t>(indent), ' ');
    if (j.is_object() && !j.empty()) {
        os << "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            os << pad << Json(it.key()).dump() << ": ";
            pretty(os, it.value(), indent + 2);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << '}';
    } else if (j.is_array() && !j.empty() && std::any_of(j.begin(), j.end(), [](const Json& x) { return x.is_structured(); })) {
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << pad;
            pretty(os, j[i], indent + 2);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << ']';
    } else if (j.is_array()) {
        os << '[';
        for (std::size_t i = 0; i < j.size(); ++i) os << (i ? ", " : "") << j[i].dump();
        os << ']';
    } else {
        os << j.dump();
    }
}

inline std::string pretty(const Json& j) {
    std::ostringstream os;
    pretty(os, j);
    os << '\n';
    return os.str();
}

inline Json toJson(const TriVirusParams& p) {
    Json viruses = Json::array();
    for (const auto& l : p.layers()) viruses.push_back({{"delta", literal(l.delta)}, {"beta", literal(l.beta)}});
    return {{"viruses", viruses}};
}

inline TriVirusParams parseParams(const Json& j, const std::string& where = "params") {
    const Json& viruses = require(j, "viruses", where);
    if (!viruses.is_array() || viruses.empty()) throw SchemaError(where + ".viruses: expected a non-empty array");
    std::vector<VirusLayer> layers;
    for (std::size_t k = 0; k < viruses.size(); ++k) {
        const std::string w = where + ".viruses[" + std::to_string(k) + "]";
        const Matrix beta = parseMatrix(require(viruses[k], "beta", w), w + ".beta");
        const Vector delta = viruses[k].contains("delta") ? parseVector(viruses[k]["delta"], w + ".delta")
                                                          : Vector::Ones(beta.rows());
        layers.push_back({delta, beta});
    }
    try {
        return TriVirusParams(std::move(layers));
    } catch (const PreconditionError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline Json toJson(const SystemState& s) {
    Json blocks = Json::array();
    for (int k = 0; k < s.viruses(); ++k) blocks.push_back(toJson(Vector(s.block(k))));
    return blocks;
}

inline SystemState parseState(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected an array of virus blocks");
    std::vector<Vector> blocks;
    for (std::size_t k = 0; k < j.size(); ++k) blocks.push_back(parseVector(j[k], where + "[" + std::to_string(k) + "]"));
    try {
        return SystemState::fromBlocks(blocks);
    } catch (const PreconditionError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline Json toJson(const Equilibrium& e) {
    Json spectrum = Json::array();
    for (Eigen::Index i = 0; i < e.jacobianSpectrum.size(); ++i)
        spectrum.push_back({number(e.jacobianSpectrum[i].real()), number(e.jacobianSpectrum[i].imag())});
    Json zero = Json::array();
    for (double s : e.zeroBlockAbscissas) zero.push_back(number(s));
    return {{"kind", toString(e.kind)},
            {"label", e.label()},
            {"support", e.support},
            {"state", toJson(e.state)},
            {"residual", e.residual},
            {"isStable", e.isStable},
            {"stabilityAbscissa", e.stabilityAbscissa},
            {"isSaturated", e.isSaturated},
            {"zeroBlockAbscissas", zero},
            {"index", e.index ? Json(*e.index) : Json("degenerate")},
            {"conditionRatio", e.conditionRatio},
            {"jacobianSpectrum", spectrum}};
}

inline Json toJson(const EnumerationResult& r) {
    Json eqs = Json::array();
    for (const auto& e : r.equilibria) eqs.push_back(toJson(e));
    Json cont = Json::array();
    for (const auto& c : r.continua)
        cont.push_back({{"support", supportLabel(c.support)},
                        {"samples", static_cast<int>(c.samples.size())},
                        {"midpointResidual", c.midpointResidual},
                        {"example", toJson(c.samples.front())}});
    return {{"equilibria", eqs},
            {"continua", cont},
            {"startsUsed", r.startsUsed},
            {"nondegenerate", r.nondegenerate},
            {"complete", r.complete},
            {"indexSumSaturated", r.indexSumSaturated}};
}

inline Json toJson(const CheckRecord& r) {
    Json w = Json::object();
    for (const auto& x : r.witnesses) w[x.name] = number(x.value);
    Json o = Json::object();
    for (const auto& x : r.orderings) o[x.relation] = x.verdict;
    Json out = {{"check", r.check},
                {"hypothesisHolds", r.hypothesisHolds},
                {"verdict", r.verdict},
                {"witnesses", w},
                {"orderings", o},
                {"conclusions", r.conclusions}};
    if (r.permutation) out["permutation"] = *r.permutation;
    if (r.equilibrium) out["equilibrium"] = toJson(*r.equilibrium);
    return out;
}

inline Json toJson(const ConditionReport& rep) {
    Json a = Json::array();
    for (const auto& r : rep.records) a.push_back(toJson(r));
    return {{"records", a}};
}

inline Json toJson(const LimitClassification& c) {
    return {{"label", c.label}, {"distance", number(c.distance)}, {"coordinates", c.coordinates}};
}

inline Json summaryJson(const Trajectory& t) {
    Json out = {{"termination", toString(t.termination)},
                {"finalTime", t.finalTime()},
                {"samples", static_cast<int>(t.times.size())},
                {"finalDerivativeNorm", t.finalDerivativeNorm},
                {"largestClampedExcursion", t.largestClampedExcursion},
                {"acceptedSteps", t.acceptedSteps},
                {"rejectedSteps", t.rejectedSteps},
                {"finalState", toJson(t.finalState())}};
    if (t.limit) out["limit"] = toJson(*t.limit);
    return out;
}

inline Json toJson(const LineFamily& f) {
    return {{"kind", "line"},
            {"z", toJson(f.z)},
            {"B1", toJson(f.b1)},
            {"C", toJson(f.c)},
            {"B2", toJson(f.b2)},
            {"B3", toJson(f.b3)},
            {"radius", f.radius},
            {"abscissa", f.abscissa},
            {"attractivity", toString(f.attractivity)},
            {"maxResidual", f.maxResidual}};
}

inline Json toJson(const PlaneFamily& f) {
    Json out = {{"kind", f.mode == PlaneMode::IdenticalViruses ? "identical-plane" : "general-plane"},
                {"anchor", toJson(f.anchor)},
                {"params", toJson(f.params)},
                {"maxResidual", f.maxResidual}};
    if (f.mode == PlaneMode::GeneralCzHat) {
        out["C"] = toJson(f.c);
        out["Chat"] = toJson(f.cHat);
    }
    return out;
}

}  // namespace trivirus::io
