#pragma once

#include "trivirus/equilibria.hpp"
#include "trivirus/model.hpp"
#include "trivirus/spectral.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

namespace trivirus {

struct Witness {
    std::string name;
    double value = 0.0;
};

struct OrderingWitness {
    std::string relation;  // e.g. "N3 vs N2", where Nk = (D^k)^{-1} B^k
    std::string verdict;   // ">>", ">", ">=" or "incomparable"
};

struct CheckRecord {
    std::string check;
    bool hypothesisHolds = false;
    std::string verdict;
    std::vector<Witness> witnesses;
    std::vector<OrderingWitness> orderings;
    std::vector<std::string> conclusions;
    std::optional<SystemState> equilibrium;
    std::optional<std::vector<int>> permutation;  // 1-based virus labels in role order

    double witness(const std::string& name) const {
        for (const auto& w : witnesses)
            if (w.name == name) return w.value;
        throw PreconditionError("CheckRecord: no witness named " + name);
    }
};

struct ConditionReport {
    std::vector<CheckRecord> records;

    const CheckRecord* find(const std::string& check) const {
        for (const auto& r : records)
            if (r.check == check) return &r;
        return nullptr;
    }
};

namespace detail {
inline std::string label(int k) { return std::to_string(k + 1); }

inline bool allAboveThreshold(const TriVirusParams& p, std::vector<Witness>& w) {
    bool ok = true;
    for (int k = 0; k < p.viruses(); ++k) {
        const double r = spectralRadius(p.normalizedInfection(k));
        w.push_back({"rho(N" + label(k) + ")", r});
        if (!(r > 1.0)) ok = false;
    }
    return ok;
}

inline std::vector<std::vector<int>> permutations3() {
    std::vector<std::vector<int>> out;
    std::vector<int> p{0, 1, 2};
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}
}  // namespace detail

inline CheckRecord checkDfeStability(const TriVirusParams& p) {
    CheckRecord r;
    r.check = "dfe-stability";
    bool allNegative = true, allNonPositive = true;
    for (int k = 0; k < p.viruses(); ++k) {
        Matrix a = p.beta(k);
        a.diagonal() -= p.delta(k);
        const double s = spectralAbscissa(a);
        r.witnesses.push_back({"s(-D" + detail::label(k) + "+B" + detail::label(k) + ")", s});
        if (!(s < -tol::band)) allNegative = false;
        if (s > tol::band) allNonPositive = false;
    }
    r.hypothesisHolds = allNonPositive;
    if (allNegative) {
        r.verdict = "GES";
        r.conclusions = {"DFE globally exponentially stable", "DFE is the unique equilibrium"};
    } else if (allNonPositive) {
        r.verdict = "unique-DFE";
        r.conclusions = {"DFE is the unique equilibrium", "DFE asymptotically stable"};
    } else {
        r.verdict = "DFE-unstable";
        r.conclusions = {"DFE unstable"};
    }
    r.equilibrium = SystemState(p.nodes(), p.viruses());
    return r;
}

inline CheckRecord checkBoundaryStability(const TriVirusParams& p, int k) {
    const auto x = singleVirusEquilibrium(p, k);
    if (!x) throw PreconditionError("checkBoundaryStability: virus " + detail::label(k) + " has no boundary equilibrium");
    CheckRecord r;
    r.check = "boundary-stability(" + detail::label(k) + ")";
    const Vector healthy = Vector::Ones(p.nodes()) - *x;
    bool anyAbove = false, anyBand = false;
    for (int j = 0; j < p.viruses(); ++j) {
        if (j == k) continue;
        const double rho = spectralRadius(healthy.asDiagonal() * p.normalizedInfection(j));
        r.witnesses.push_back({"rho((I-X" + detail::label(k) + ")N" + detail::label(j) + ")", rho});
        if (rho > 1.0 + tol::band) anyAbove = true;
        else if (rho >= 1.0 - tol::band) anyBand = true;
    }
    r.verdict = anyAbove ? "unstable" : anyBand ? "inconclusive" : "stable";
    r.hypothesisHolds = r.verdict == "stable";
    r.conclusions = {"boundary equilibrium " + detail::label(k) + " " +
                     (r.verdict == "stable" ? "locally exponentially stable" : r.verdict)};
    SystemState s(p.nodes(), p.viruses());
    s.block(k) = *x;
    r.equilibrium = s;
    return r;
}

// Strongest nonexistence theorem: N_c > N_b > N_a with every
// rho(N_k) > 1 rules out 3-coexistence. All relabelings are searched.
inline CheckRecord checkNonexistence3Coexistence(const TriVirusParams& p) {
    p.requireThreeViruses("checkNonexistence3Coexistence");
    if (!p.allIrreducible()) throw PreconditionError("checkNonexistence3Coexistence: reducible infection matrix");
    CheckRecord r;
    r.check = "nonexistence-3-coexistence";
    const bool above = detail::allAboveThreshold(p, r.witnesses);
    std::vector<Matrix> nk;
    for (int k = 0; k < 3; ++k) nk.push_back(p.normalizedInfection(k));
    for (const auto& perm : detail::permutations3()) {
        const int a = perm[0], b = perm[1], c = perm[2];
        const Order cb = elementwiseGreater(nk[c], nk[b]);
        const Order ba = elementwiseGreater(nk[b], nk[a]);
        if (perm == std::vector<int>{0, 1, 2} || (impliesGreater(cb) && impliesGreater(ba))) {
            r.orderings.push_back({"N" + detail::label(c) + " vs N" + detail::label(b), toString(cb)});
            r.orderings.push_back({"N" + detail::label(b) + " vs N" + detail::label(a), toString(ba)});
        }
        if (above && impliesGreater(cb) && impliesGreater(ba)) {
            r.hypothesisHolds = true;
            r.permutation = std::vector<int>{a + 1, b + 1, c + 1};
            r.conclusions = {"DFE unstable",
                             "boundary equilibrium " + detail::label(a) + " unstable",
                             "boundary equilibrium " + detail::label(b) + " unstable",
                             "boundary equilibrium " + detail::label(c) + " locally exponentially stable",
                             "no 3-coexistence equilibrium"};
            break;
        }
    }
    r.verdict = r.hypothesisHolds ? "holds" : (above ? "fails" : "fails(threshold)");
    return r;
}

// Weaker theorem: N_b > N_a and N_c > N_a rule out the two 2-coexistence forms
// in which virus a survives. Never excludes the form without virus a.
inline CheckRecord checkNonexistence2Coexistence(const TriVirusParams& p) {
    p.requireThreeViruses("checkNonexistence2Coexistence");
    if (!p.allIrreducible()) throw PreconditionError("checkNonexistence2Coexistence: reducible infection matrix");
    CheckRecord r;
    r.check = "nonexistence-2-coexistence";
    const bool above = detail::allAboveThreshold(p, r.witnesses);
    std::vector<Matrix> nk;
    for (int k = 0; k < 3; ++k) nk.push_back(p.normalizedInfection(k));
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, c = (a + 2) % 3;
        const int lo = std::min(b, c), hi = std::max(b, c);
        const Order ba = elementwiseGreater(nk[lo], nk[a]);
        const Order ca = elementwiseGreater(nk[hi], nk[a]);
        r.orderings.push_back({"N" + detail::label(lo) + " vs N" + detail::label(a), toString(ba)});
        r.orderings.push_back({"N" + detail::label(hi) + " vs N" + detail::label(a), toString(ca)});
        if (above && impliesGreater(ba) && impliesGreater(ca)) {
            r.hypothesisHolds = true;
            r.permutation = std::vector<int>{a + 1, lo + 1, hi + 1};
            Support s1(3, false), s2(3, false);
            s1[a] = s1[lo] = true;
            s2[a] = s2[hi] = true;
            r.conclusions = {"excludes " + supportLabel(s1), "excludes " + supportLabel(s2)};
            break;
        }
    }
    r.verdict = r.hypothesisHolds ? "holds" : (above ? "fails" : "fails(threshold)");
    return r;
}

// Trichotomy (stable boundary / saturated 2-coexistence / 3-coexistence) and
// the odd-count corollary, checked against an enumeration.
inline CheckRecord checkSaturatedExistence(const TriVirusParams& p, const EnumerationResult& e) {
    p.requireThreeViruses("checkSaturatedExistence");
    CheckRecord r;
    r.check = "saturated-existence";
    if (!detail::allAboveThreshold(p, r.witnesses)) {
        r.verdict = "not-applicable";
        r.conclusions = {"some rho(N_k) <= 1"};
        return r;
    }
    if (!e.nondegenerate) throw PreconditionError("checkSaturatedExistence: enumeration is degenerate");

    bool allBoundaryUnstable = true;
    for (int k = 0; k < 3; ++k) {
        const CheckRecord b = checkBoundaryStability(p, k);
        for (const auto& w : b.witnesses) {
            r.witnesses.push_back(w);
            if (!(w.value > 1.0 + tol::band)) allBoundaryUnstable = false;
        }
    }
    bool allTwoUnsaturated = true, stableBoundary = false, saturatedTwo = false;
    int two = 0, three = 0, threeSaturated = 0;
    for (const auto& eq : e.equilibria) {
        if (eq.kind == EquilibriumKind::Boundary && eq.isStable) stableBoundary = true;
        if (eq.kind == EquilibriumKind::TwoCoexistence) {
            ++two;
            if (eq.isSaturated) saturatedTwo = true;
            for (int k = 0; k < 3; ++k) {
                if (eq.support[k]) continue;
                r.witnesses.push_back({"s(zero block " + detail::label(k) + " at " + eq.label() + ")", eq.zeroBlockAbscissas[k]});
                if (eq.zeroBlockAbscissas[k] < -tol::band) allTwoUnsaturated = false;
            }
        }
        if (eq.kind == EquilibriumKind::ThreeCoexistence) {
            ++three;
            if (eq.isSaturated) ++threeSaturated;
        }
    }
    r.witnesses.push_back({"count(2-coexistence)", static_cast<double>(two)});
    r.witnesses.push_back({"count(3-coexistence)", static_cast<double>(three)});
    r.witnesses.push_back({"index sum over saturated", static_cast<double>(e.indexSumSaturated)});

    const bool trichotomy = stableBoundary || saturatedTwo || three > 0;
    r.hypothesisHolds = allBoundaryUnstable && allTwoUnsaturated;
    if (stableBoundary) r.conclusions.push_back("stable boundary equilibrium present");
    if (saturatedTwo) r.conclusions.push_back("saturated 2-coexistence equilibrium present");
    if (three > 0) r.conclusions.push_back("3-coexistence equilibrium present");
    if (r.hypothesisHolds) {
        const bool odd = three % 2 == 1 && threeSaturated == three;
        r.conclusions.push_back("odd number of saturated 3-coexistence equilibria expected");
        r.verdict = odd ? "corollary-confirmed" : "corollary-violated";
    } else {
        r.verdict = trichotomy ? "trichotomy-satisfied" : "trichotomy-violated";
    }
    return r;
}

inline ConditionReport checkConditions(const TriVirusParams& p, const EnumerationResult* e = nullptr) {
    ConditionReport rep;
    rep.records.push_back(checkDfeStability(p));
    for (int k = 0; k < p.viruses(); ++k)
        if (singleVirusEquilibrium(p, k)) rep.records.push_back(checkBoundaryStability(p, k));
    if (p.viruses() == 3) {
        rep.records.push_back(checkNonexistence3Coexistence(p));
        rep.records.push_back(checkNonexistence2Coexistence(p));
        if (e && e->nondegenerate) rep.records.push_back(checkSaturatedExistence(p, *e));
    }
    return rep;
}

struct SignedEdge {
    int source = 0;
    int target = 0;
    int sign = 1;  // +1 or -1
};

struct SignedGraph {
    int vertices = 0;
    std::vector<SignedEdge> edges;
};

// Off-diagonal sign pattern of a matrix; zero entries and the diagonal give no edge.
inline SignedGraph signGraphOf(const Matrix& j) {
    SignedGraph g;
    g.vertices = static_cast<int>(j.rows());
    for (int a = 0; a < g.vertices; ++a)
        for (int b = 0; b < g.vertices; ++b)
            if (a != b && j(a, b) != 0.0) g.edges.push_back({b, a, j(a, b) > 0.0 ? 1 : -1});
    return g;
}

// Edge b -> a carries the sign of dF_a/dx_b, evaluated at x^k = 1/(2m) 1.
inline SignedGraph buildJacobianSignGraph(const TriVirusParams& p) {
    const double probe = 1.0 / (2.0 * p.viruses());
    SystemState s(p.nodes(), p.viruses());
    s.stacked().setConstant(probe);
    return signGraphOf(evalJacobian(p, s));
}

// Balance test: a labelling sigma in {+1, -1} with sign(e) = sigma(u) sigma(v)
// on every edge exists iff every undirected cycle has positive sign.
inline bool isSignConsistent(const SignedGraph& g) {
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(g.vertices));
    for (const auto& e : g.edges) {
        adj[e.source].push_back({e.target, e.sign});
        adj[e.target].push_back({e.source, e.sign});
    }
    std::vector<int> label(static_cast<std::size_t>(g.vertices), 0);
    for (int root = 0; root < g.vertices; ++root) {
        if (label[root]) continue;
        label[root] = 1;
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (auto [w, sign] : adj[v]) {
                const int want = label[v] * sign;
                if (!label[w]) {
                    label[w] = want;
                    q.push(w);
                } else if (label[w] != want) {
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace trivirus
