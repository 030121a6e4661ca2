// Acceptance run: one [PASS]/[FAIL] line per criterion with the measured
// values next to the pinned tolerances. Exit status is nonzero when any
// criterion fails.

#include "oracles.hpp"

#include "trivirus/conditions.hpp"
#include "trivirus/equilibria.hpp"
#include "trivirus/families.hpp"
#include "trivirus/limits.hpp"
#include "trivirus/presets.hpp"
#include "trivirus/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace trivirus;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes << " !" << what << ";";
        }
    }
    template <class T>
    Outcome& note(const T& v) {
        notes << v;
        return *this;
    }
};

int failures = 0;

void criterion(const char* id, const char* title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.notes << " exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %s %s (%.2f s):%s\n", o.pass ? "PASS" : "FAIL", id, title, secondsSince(t0), o.notes.str().c_str());
    std::fflush(stdout);
}

std::string fmt(double v, const char* f = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double supDistance(const SystemState& a, const SystemState& b) {
    return (a.stacked() - b.stacked()).lpNorm<Eigen::Infinity>();
}

SystemState boundaryState(const TriVirusParams& p, int k) {
    SystemState s(p.nodes(), p.viruses());
    s.block(k) = *singleVirusEquilibrium(p, k);
    return s;
}

Trajectory settle(const TriVirusParams& p, const SystemState& x0, double horizon) {
    SimConfig cfg;
    cfg.horizon = horizon;
    return integrate(p, x0, cfg);
}

// The enumerated equilibrium a converged trajectory settled on, or nothing
// when the limit is not among the known roots.
std::optional<Equilibrium> limitOf(const Trajectory& traj, const EnumerationResult& e) {
    if (traj.termination != Termination::Converged) return std::nullopt;
    KnownLimits known;
    known.equilibria = e.equilibria;
    const auto c = classifyLimit(traj, known);
    if (c.target != LimitClassification::Target::Equilibrium) return std::nullopt;
    return e.equilibria[c.equilibriumIndex];
}

bool stronglyInterior(const SystemState& s) {
    return (s.stacked().array() > 0.0).all() && (s.total().array() < 1.0).all();
}

// ---------------------------------------------------------------- worked examples

void c1(Outcome& o) {
    const auto t0 = Clock::now();
    const auto p = presets::example1();
    const double expected[3][2] = {{0.9829, 0.99624}, {1.0174, 1.0127}, {1.003, 0.9863}};
    const char* verdicts[3] = {"stable", "unstable", "unstable"};
    double worst = 0.0, oracleGap = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto r = checkBoundaryStability(p, k);
        o.require(r.verdict == verdicts[k], "boundary " + std::to_string(k + 1) + " verdict " + r.verdict);
        const Vector healthy = Vector::Ones(4) - *singleVirusEquilibrium(p, k);
        for (int w = 0, j = 0; j < 3; ++j) {
            if (j == k) continue;
            const double v = r.witnesses.at(w).value;
            worst = std::max(worst, std::abs(v - expected[k][w]));
            oracleGap = std::max(oracleGap, std::abs(v - oracle::powerRadius(healthy.asDiagonal() * p.normalizedInfection(j))));
            o.note(" ").note(fmt(v, "%.5f"));
            ++w;
        }
    }
    const double elapsed = secondsSince(t0);
    o.note("; max |radius - expected| = ").note(fmt(worst)).note(" (tol 5e-4)");
    o.note("; oracle gap ").note(fmt(oracleGap));
    o.note("; runtime ").note(fmt(elapsed, "%.3f")).note(" s (limit 1 s)");
    o.require(worst < 5e-4, "radii");
    o.require(oracleGap < 1e-9, "oracle");
    o.require(elapsed < 1.0, "runtime");
}

void c2(Outcome& o) {
    const auto t0 = Clock::now();
    const auto p = presets::example5();
    const Vector expected = (Vector(5) << 0.691, 0.610, 0.758, 0.078, 0.051).finished();
    const double xErr = (*singleVirusEquilibrium(p, 0) - expected).lpNorm<Eigen::Infinity>();
    o.note(" |x~ - expected| = ").note(fmt(xErr)).note(" (tol 5e-4)");
    o.require(xErr < 5e-4, "x~");

    const auto plane = presets::example5Plane();
    std::vector<std::array<double, 3>> alphas;
    for (std::uint64_t seed : {1u, 2u}) {
        const auto traj = settle(p, randomInteriorStart(5, seed), 2000.0);
        o.require(traj.termination == Termination::Converged, "seed " + std::to_string(seed) + " did not converge");
        const auto d = distanceToFamily(plane, traj.finalState());
        const double sum = d.coordinates[0] + d.coordinates[1] + d.coordinates[2];
        o.note("; seed ").note(seed).note(": distance ").note(fmt(d.distance)).note(" alpha [");
        o.note(fmt(d.coordinates[0], "%.4f")).note(", ").note(fmt(d.coordinates[1], "%.4f")).note(", ");
        o.note(fmt(d.coordinates[2], "%.4f")).note("] sum-1 ").note(fmt(sum - 1.0));
        o.require(d.distance < 1e-6, "distance");
        o.require(std::abs(sum - 1.0) < 1e-6, "alpha sum");
        alphas.push_back(d.coordinates);
    }
    double diff = 0.0;
    for (int i = 0; i < 3; ++i) diff = std::max(diff, std::abs(alphas[0][i] - alphas[1][i]));
    const double elapsed = secondsSince(t0);
    o.note("; alpha difference ").note(fmt(diff)).note(" (need > 1e-3); runtime ").note(fmt(elapsed, "%.3f"));
    o.note(" s (limit 10 s)");
    o.require(diff > 1e-3, "alpha difference");
    o.require(elapsed < 10.0, "runtime");
}

void c3(Outcome& o) {
    const auto t0 = Clock::now();
    const auto two = presets::lineFamilyOf(presets::example2());
    const auto three = presets::lineFamilyOf(presets::example3());
    const double zErr = (two.z.array() - 1.0 / 3.0).abs().maxCoeff();
    o.note(" rho2 = ").note(fmt(two.radius, "%.5f")).note(" ").note(toString(two.attractivity));
    o.note("; rho3 = ").note(fmt(three.radius, "%.5f")).note(" ").note(toString(three.attractivity));
    o.note("; |z - 1/3| = ").note(fmt(zErr)).note(" (tol 1e-10)");
    o.require(std::abs(two.radius - 1.0043) < 5e-4 && two.attractivity == Attractivity::Unstable, "Example 2 radius");
    o.require(std::abs(three.radius - 0.9911) < 5e-4 && three.attractivity == Attractivity::Attractive,
              "Example 3 radius");
    o.require(zErr < 1e-10, "z");

    const auto t3 = settle(presets::example3(), randomInteriorStart(4, 1), 20000.0);
    const double lineDist = distanceToFamily(three, t3.finalState()).distance;
    o.note("; Example 3 ").note(toString(t3.termination)).note(" at t=").note(fmt(t3.finalTime(), "%.1f"));
    o.note(", distance to line ").note(fmt(lineDist)).note(" (tol 1e-6)");
    o.require(t3.termination == Termination::Converged && lineDist < 1e-6, "Example 3 limit");

    const auto p2 = presets::example2();
    const auto t2 = settle(p2, randomInteriorStart(4, 1), 40000.0);
    const double bDist = supDistance(t2.finalState(), boundaryState(p2, 2));
    o.note("; Example 2 ").note(toString(t2.termination)).note(" at t=").note(fmt(t2.finalTime(), "%.1f"));
    o.note(", |x - (0,0,x~3)| = ").note(fmt(bDist));
    o.require(t2.termination == Termination::Converged && bDist < 1e-6, "Example 2 limit");

    const double elapsed = secondsSince(t0);
    o.note("; runtime ").note(fmt(elapsed, "%.3f")).note(" s (limit 30 s)");
    o.require(elapsed < 30.0, "runtime");
}

void c4(Outcome& o) {
    const auto p = presets::example6();
    const auto r = checkNonexistence3Coexistence(p);
    o.note(" hypothesis ").note(r.verdict);
    o.require(r.hypothesisHolds, "ordering hypothesis");
    const auto e = enumerateEquilibria(p, 200, 1);
    const int three = e.count(EquilibriumKind::ThreeCoexistence);
    o.note("; starts used ").note(e.startsUsed).note(", 3-coexistence roots ").note(three);
    o.require(three == 0, "3-coexistence root found");
    const auto traj = settle(p, randomInteriorStart(5, 1), 20000.0);
    const double d = supDistance(traj.finalState(), boundaryState(p, 2));
    o.note("; trajectory ").note(toString(traj.termination)).note(", |x - (0,0,x~3)| = ").note(fmt(d));
    o.require(traj.termination == Termination::Converged && d < 1e-6, "limit");
}

void c5(Outcome& o) {
    const auto p = presets::example7();
    const auto strong = checkNonexistence3Coexistence(p);
    const auto weak = checkNonexistence2Coexistence(p);
    o.note(" weak ").note(weak.verdict).note(", strong ").note(strong.verdict);
    o.require(weak.hypothesisHolds, "weak hypothesis");
    o.require(!strong.hypothesisHolds, "strong hypothesis should fail");
    const auto traj = settle(p, randomInteriorStart(5, 1), 20000.0);
    o.require(traj.termination == Termination::Converged, "convergence");
    const SystemState& x = traj.finalState();
    const double b1 = x.block(0).maxCoeff();
    const double live = std::min(x.block(1).minCoeff(), x.block(2).minCoeff());
    const auto eq = limitOf(traj, enumerateEquilibria(p, 100, 1));
    o.note("; limit ").note(eq ? eq->label() : "novel").note(", max virus-1 entry ").note(fmt(b1)).note(" (tol 1e-8)");
    o.require(b1 < 1e-8, "virus 1 block");
    o.require(live > 1e-6 && eq && eq->kind == EquilibriumKind::TwoCoexistence, "2-coexistence limit");
}

void c6(Outcome& o) {
    const auto p = presets::example8();
    double minRadius = 1e300;
    for (int k = 0; k < 3; ++k)
        for (const auto& w : checkBoundaryStability(p, k).witnesses) minRadius = std::min(minRadius, w.value);
    o.note(" min boundary radius ").note(fmt(minRadius, "%.5f"));
    o.require(minRadius > 1.0, "boundary radii");
    const auto e = enumerateEquilibria(p, 200, 3);
    const auto saturated = checkSaturatedExistence(p, e);
    o.note("; corollary check ").note(saturated.verdict);

    int two = 0, twoSaturated = 0, three = 0, threeSaturated = 0;
    for (const auto& eq : e.equilibria) {
        if (eq.kind == EquilibriumKind::TwoCoexistence) {
            ++two;
            if (eq.isSaturated) {
                ++twoSaturated;
                o.note("; saturated ").note(eq.label());
            }
        }
        if (eq.kind == EquilibriumKind::ThreeCoexistence) {
            ++three;
            if (eq.isSaturated) ++threeSaturated;
        }
    }
    o.note("; 2-coexistence found ").note(two).note(" (saturated ").note(twoSaturated).note(")");
    o.note("; 3-coexistence found ").note(three).note(" (saturated ").note(threeSaturated).note(")");
    o.require(twoSaturated == 0, "a 2-coexistence equilibrium is saturated");
    o.require(three % 2 == 1 && threeSaturated == three, "odd count of saturated 3-coexistence");

    const auto traj = settle(p, randomInteriorStart(5, 1), 20000.0);
    const auto limit = limitOf(traj, e);
    o.note("; trajectory ").note(toString(traj.termination)).note(" to ").note(limit ? limit->label() : "novel");
    o.require(limit && limit->kind == EquilibriumKind::ThreeCoexistence, "trajectory limit");
}

void c7(Outcome& o) {
    const auto p = presets::example9();
    const auto ics = presets::example9InitialConditions();
    const auto e = enumerateEquilibria(p, 100, 1);
    std::vector<Equilibrium> limits;
    for (int c = 0; c < 2; ++c) {
        const auto traj = settle(p, ics[c], 20000.0);
        const auto found = limitOf(traj, e);
        if (!found) throw NumericalError("class " + std::to_string(c + 1) + " has no enumerated limit");
        const Equilibrium& eq = *found;
        o.note(c ? "; " : " ").note("class ").note(c + 1).note(" -> ").note(eq.label());
        o.note(" abscissa ").note(fmt(eq.stabilityAbscissa));
        o.require(eq.kind == EquilibriumKind::TwoCoexistence, "2-coexistence");
        o.require(eq.stabilityAbscissa < -1e-8, "abscissa");
        limits.push_back(eq);
    }
    o.require(!limits[0].support[1] && !limits[1].support[0], "extinct viruses should be 2 then 1");
    o.note("; separation ").note(fmt(supDistance(limits[0].state, limits[1].state)));
}

// ---------------------------------------------------------------- property suite

void p8a(Outcome& o) {
    std::mt19937_64 gen(801);
    int systems = 0, guardTrips = 0, notInterior = 0, domain = 0;
    double largestClamp = 0.0;
    SimConfig cfg;
    cfg.horizon = 50.0;
    cfg.stopOnConvergence = false;
    for (int t = 0; t < 1000; ++t) {
        const int n = 2 + t % 5;
        const auto p = oracle::randomSystem(gen, n);
        const auto traj = integrate(p, randomInteriorStart(n, 10000 + t), cfg);
        ++systems;
        if (traj.termination == Termination::GuardTripped) ++guardTrips;
        largestClamp = std::max(largestClamp, traj.largestClampedExcursion);
        for (const auto& s : traj.states) {
            if (!validateState(s, 0.0).empty()) ++domain;
            if (!stronglyInterior(s)) ++notInterior;
        }
    }
    o.note(" systems ").note(systems).note(", guard trips ").note(guardTrips).note(", domain violations ").note(domain);
    o.note(", non-interior samples ").note(notInterior).note(", largest clamped excursion ").note(fmt(largestClamp));
    o.require(systems >= 1000 && guardTrips == 0 && domain == 0 && notInterior == 0, "domain");
}

void p8b(Outcome& o) {
    std::mt19937_64 gen(802);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 6;
        const auto p = oracle::randomSystem(gen, n);
        const Vector x = oracle::randomInteriorState(gen, n, 3);
        const Matrix err = evalJacobian(p, SystemState::fromStacked(x, 3)) - oracle::finiteDifferenceJacobian(p, x);
        worst = std::max(worst, err.cwiseAbs().maxCoeff());
    }
    o.note(" probes 100, max entrywise error ").note(fmt(worst)).note(" (tol 1e-5)");
    o.require(worst < 1e-5, "jacobian");
}

void p8c(Outcome& o) {
    std::mt19937_64 gen(803);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    int agree = 0, borderline = 0, mismatch = 0;
    for (int t = 0; t < 500; ++t) {
        const int n = 2 + t % 7;
        const Matrix nn = oracle::randomIrreducible(gen, n);
        Vector lambda(n);
        for (int i = 0; i < n; ++i) lambda[i] = -u(gen);
        Matrix m = nn;
        m.diagonal() += lambda;
        const double s = spectralAbscissa(m);
        const double rho = spectralRadius((-lambda).cwiseInverse().asDiagonal() * nn);
        if (std::abs(rho - 1.0) < 1e-9) {
            ++borderline;
            continue;
        }
        if ((s < 0.0) == (rho < 1.0) && (s > 0.0) == (rho > 1.0)) ++agree;
        else ++mismatch;
    }
    o.note(" draws 500, agree ").note(agree).note(", borderline skipped ").note(borderline);
    o.note(", mismatches ").note(mismatch);
    o.require(mismatch == 0 && agree >= 490, "sign equivalence");
}

void p8d(Outcome& o) {
    std::mt19937_64 gen(804);
    int triConsistent = 0, biInconsistent = 0, bruteDisagree = 0;
    const int systems = 200;
    for (int t = 0; t < systems; ++t) {
        const int n = 1 + t % 5;
        const auto p = oracle::randomSystem(gen, n);
        const bool tri = isSignConsistent(buildJacobianSignGraph(p));
        if (tri) ++triConsistent;
        for (auto pair : {std::vector<int>{0, 1}, std::vector<int>{0, 2}, std::vector<int>{1, 2}}) {
            const auto sub = p.restrictedTo(pair);
            const bool bi = isSignConsistent(buildJacobianSignGraph(sub));
            if (!bi) ++biInconsistent;
            if (n <= 3) {
                SystemState probe(n, 2);
                probe.stacked().setConstant(0.25);
                if (oracle::bruteForceConsistent(2 * n, oracle::signEdges(evalJacobian(sub, probe))) != bi) ++bruteDisagree;
            }
        }
        if (n <= 3) {
            SystemState probe(n, 3);
            probe.stacked().setConstant(1.0 / 6.0);
            if (oracle::bruteForceConsistent(3 * n, oracle::signEdges(evalJacobian(p, probe))) != tri) ++bruteDisagree;
        }
    }
    o.note(" systems ").note(systems).note(", consistent trivirus graphs ").note(triConsistent);
    o.note(", inconsistent bivirus restrictions ").note(biInconsistent).note(", brute-force disagreements ");
    o.note(bruteDisagree);
    o.require(triConsistent == 0 && biInconsistent == 0 && bruteDisagree == 0, "sign graphs");
}

void p8e(Outcome& o) {
    std::mt19937_64 gen(805);
    int qualifying = 0, attempts = 0, wrong = 0;
    while (qualifying < 50 && attempts < 1000) {
        const int n = 1 + attempts % 3;
        const auto p = oracle::randomSystem(gen, n);
        const auto r = enumerateEquilibria(p, 60, 5000 + attempts);
        ++attempts;
        if (!r.nondegenerate || !r.complete) continue;
        ++qualifying;
        if (r.indexSumSaturated != 1) ++wrong;
    }
    o.note(" qualifying systems ").note(qualifying).note(" of ").note(attempts).note(" drawn, index sum != 1: ");
    o.note(wrong);
    o.require(qualifying == 50 && wrong == 0, "index sum");
}

void p8f(Outcome& o) {
    const auto base = enumerateEquilibria(presets::example4(), 40, 1);
    o.note(" unperturbed continua ").note(base.continua.size());
    o.require(base.continuumSuspected(), "unperturbed system should flag a continuum");
    const auto rep = genericityProbe(presets::example4(), 100, 0.05, 806, 40);
    o.note("; perturbations ").note(rep.trials).note(", degenerate ").note(rep.degenerateTrials);
    o.note(", continuum ").note(rep.continuumTrials).note(", root counts {");
    bool first = true;
    for (const auto& [count, times] : rep.countHistogram) {
        o.note(first ? "" : ", ").note(count).note(": ").note(times);
        first = false;
    }
    o.note("}");
    o.require(rep.trials == 100 && rep.degenerateTrials == 0 && rep.continuumTrials == 0, "genericity");
}

void p8g(Outcome& o) {
    std::mt19937_64 gen(807);
    int multiLive = 0, threeAtTwo = 0, nondegenerateOne = 0, nondegenerateTwo = 0;
    for (int t = 0; t < 200; ++t) {
        const auto r = enumerateEquilibria(oracle::randomSystem(gen, 1), 30, 7000 + t);
        if (r.nondegenerate) ++nondegenerateOne;
        multiLive += r.count(EquilibriumKind::TwoCoexistence) + r.count(EquilibriumKind::ThreeCoexistence) +
                     static_cast<int>(r.continua.size());
    }
    for (int t = 0; t < 200; ++t) {
        const auto r = enumerateEquilibria(oracle::randomSystem(gen, 2), 30, 8000 + t);
        if (r.nondegenerate) ++nondegenerateTwo;
        threeAtTwo += r.count(EquilibriumKind::ThreeCoexistence);
        for (const auto& c : r.continua) threeAtTwo += kindOf(c.support) == EquilibriumKind::ThreeCoexistence;
    }
    o.note(" n=1: 200 systems, multi-live equilibria ").note(multiLive).note(" (nondegenerate ").note(nondegenerateOne);
    o.note("); n=2: 200 systems, 3-coexistence equilibria ").note(threeAtTwo).note(" (nondegenerate ");
    o.note(nondegenerateTwo).note(")");
    o.require(multiLive == 0 && threeAtTwo == 0, "low-dimension propositions");
}

}  // namespace

int main() {
    criterion("C1", "Example 1 boundary radii and verdicts", c1);
    criterion("C2", "Example 5 plane of equilibria", c2);
    criterion("C3", "Examples 2/3 line of equilibria", c3);
    criterion("C4", "Example 6 no 3-coexistence", c4);
    criterion("C5", "Example 7 weak ordering", c5);
    criterion("C6", "Example 8 odd saturated 3-coexistence", c6);
    criterion("C7", "Example 9 two stable 2-coexistence limits", c7);

    const auto suite = Clock::now();
    criterion("8a", "domain invariance and interiority", p8a);
    criterion("8b", "Jacobian vs finite differences", p8b);
    criterion("8c", "Metzler sign equivalence", p8c);
    criterion("8d", "sign-graph consistency", p8d);
    criterion("8e", "saturated index sum", p8e);
    criterion("8f", "genericity probe", p8f);
    criterion("8g", "low-dimension propositions", p8g);
    const double total = secondsSince(suite);
    const bool fast = total < 300.0;
    if (!fast) ++failures;
    std::printf("[%s] 8* property-suite runtime %.1f s (limit 300 s)\n", fast ? "PASS" : "FAIL", total);

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
