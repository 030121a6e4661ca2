#pragma once

#include "trivirus/model.hpp"
#include "trivirus/sim.hpp"
#include "trivirus/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace trivirus {

// Single-virus (boundary) equilibrium of xdot = ((I - X)B - D)x.
// Absent when rho(D^{-1}B) <= 1; otherwise the unique root with 0 << x << 1.
inline std::optional<Vector> singleVirusEquilibrium(const Vector& delta, const Matrix& beta) {
    if (delta.size() != beta.rows() || beta.rows() != beta.cols())
        throw PreconditionError("singleVirusEquilibrium: dimension mismatch");
    if ((delta.array() <= 0.0).any()) throw PreconditionError("singleVirusEquilibrium: healing rates must be positive");
    if (!isIrreducible(beta)) throw PreconditionError("singleVirusEquilibrium: infection matrix is reducible");
    const Matrix normalized = delta.cwiseInverse().asDiagonal() * beta;
    const PerronPair pp = perron(normalized);
    if (pp.value <= 1.0) return std::nullopt;

    const auto n = delta.size();
    Vector x = (1.0 - 1.0 / pp.value) * pp.vector;
    for (int it = 0; it < 20000; ++it) {
        const Vector bx = beta * x;
        const Vector next = bx.cwiseQuotient(delta + bx);
        const double change = (next - x).lpNorm<Eigen::Infinity>();
        x = next;
        if (change < 1e-14) break;
    }
    for (int it = 0; it < 50; ++it) {
        const Vector bx = beta * x;
        const Vector f = (Vector::Ones(n) - x).cwiseProduct(bx) - delta.cwiseProduct(x);
        if (f.lpNorm<Eigen::Infinity>() < 1e-15) break;
        Matrix j = (Vector::Ones(n) - x).asDiagonal() * beta;
        j.diagonal() -= delta + bx;
        const Vector step = j.partialPivLu().solve(-f);
        x += step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
    }
    if (!((x.array() > 0.0).all() && (x.array() < 1.0).all()))
        throw NumericalError("singleVirusEquilibrium: root left the open unit box");
    const Vector bx = beta * x;
    const double res = ((Vector::Ones(n) - x).cwiseProduct(bx) - delta.cwiseProduct(x)).lpNorm<Eigen::Infinity>();
    if (res >= 1e-12) throw NumericalError("singleVirusEquilibrium: residual did not reach 1e-12");
    return x;
}

inline std::optional<Vector> singleVirusEquilibrium(const TriVirusParams& p, int k) {
    return singleVirusEquilibrium(p.delta(k), p.beta(k));
}

enum class EquilibriumKind { DiseaseFree, Boundary, TwoCoexistence, ThreeCoexistence, Coexistence };

inline const char* toString(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::DiseaseFree: return "disease-free";
        case EquilibriumKind::Boundary: return "boundary";
        case EquilibriumKind::TwoCoexistence: return "2-coexistence";
        case EquilibriumKind::ThreeCoexistence: return "3-coexistence";
        case EquilibriumKind::Coexistence: return "coexistence";
    }
    return "?";
}

using Support = std::vector<bool>;

inline std::vector<int> liveViruses(const Support& s) {
    std::vector<int> out;
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s[k]) out.push_back(static_cast<int>(k));
    return out;
}

inline EquilibriumKind kindOf(const Support& s) {
    switch (liveViruses(s).size()) {
        case 0: return EquilibriumKind::DiseaseFree;
        case 1: return EquilibriumKind::Boundary;
        case 2: return EquilibriumKind::TwoCoexistence;
        case 3: return EquilibriumKind::ThreeCoexistence;
        default: return EquilibriumKind::Coexistence;
    }
}

// "boundary(2)", "2-coexistence(1,3)", ... with 1-based virus labels.
inline std::string supportLabel(const Support& s) {
    const auto live = liveViruses(s);
    if (live.empty()) return "disease-free";
    std::ostringstream os;
    os << toString(kindOf(s)) << '(';
    for (std::size_t i = 0; i < live.size(); ++i) os << (i ? "," : "") << live[i] + 1;
    os << ')';
    return os.str();
}

struct Equilibrium {
    SystemState state;
    Support support;
    EquilibriumKind kind = EquilibriumKind::DiseaseFree;
    ComplexVector jacobianSpectrum;
    double stabilityAbscissa = 0.0;
    bool isStable = false;
    bool isSaturated = false;
    // s(-D^k + (I - sum X)B^k) for every dead virus k; NaN for live viruses.
    std::vector<double> zeroBlockAbscissas;
    std::optional<int> index;  // sign(det(-J)); absent when the Jacobian is degenerate
    bool degenerate = false;
    double conditionRatio = 0.0;  // sigma_min / sigma_max of J
    double residual = 0.0;

    std::string label() const { return supportLabel(support); }
};

// Every live block strictly positive above the live threshold and the node
// totals strictly below one.
inline bool satisfiesDichotomy(const SystemState& s) {
    for (int k = 0; k < s.viruses(); ++k) {
        const auto b = s.block(k);
        const bool dead = (b.array() == 0.0).all();
        if (!dead && b.minCoeff() <= tol::live) return false;
    }
    return (s.total().array() < 1.0).all();
}

inline Equilibrium certify(const TriVirusParams& params, const SystemState& state) {
    if (state.nodes() != params.nodes() || state.viruses() != params.viruses())
        throw PreconditionError("certify: state and params differ in shape");
    const int n = params.nodes(), m = params.viruses();
    Equilibrium eq;
    eq.state = state;
    Vector f;
    vectorFieldKernel(params, state.stacked(), f);
    eq.residual = f.lpNorm<Eigen::Infinity>();
    eq.support.assign(m, false);
    for (int k = 0; k < m; ++k) eq.support[k] = (state.block(k).array() != 0.0).any();
    eq.kind = kindOf(eq.support);

    const Matrix j = jacobianKernel(params, state.stacked());
    eq.jacobianSpectrum = eigenvalues(j);
    eq.stabilityAbscissa = eq.jacobianSpectrum.real().maxCoeff();
    eq.isStable = eq.stabilityAbscissa < -tol::stable;

    const Vector healthy = Vector::Ones(n) - state.total();
    eq.isSaturated = true;
    eq.zeroBlockAbscissas.assign(m, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < m; ++k) {
        if (eq.support[k]) continue;
        Matrix block = healthy.asDiagonal() * params.beta(k);
        block.diagonal() -= params.delta(k);
        eq.zeroBlockAbscissas[k] = spectralAbscissa(block);
        if (!(eq.zeroBlockAbscissas[k] < 0.0)) eq.isSaturated = false;
    }

    const Eigen::JacobiSVD<Matrix> svd(j);
    const Vector sv = svd.singularValues();
    eq.conditionRatio = sv.size() && sv[0] > 0.0 ? sv[sv.size() - 1] / sv[0] : 0.0;
    eq.degenerate = !(eq.conditionRatio > tol::nondegenerate);
    if (!eq.degenerate) {
        const double det = (-j).partialPivLu().determinant();
        eq.index = det > 0.0 ? 1 : -1;
    }
    return eq;
}

// Recomputes saturation, stability and index of a converged root.
inline Equilibrium saturationAndIndex(const TriVirusParams& params, const Equilibrium& eq) {
    Vector f;
    vectorFieldKernel(params, eq.state.stacked(), f);
    if (!(f.lpNorm<Eigen::Infinity>() < tol::equilibriumResidual))
        throw PreconditionError("saturationAndIndex: residual is not below 1e-10");
    return certify(params, eq.state);
}

struct NewtonOptions {
    double tolerance = 1e-12;
    int maxIterations = 100;
};

// Newton's method on the subsystem of live viruses with the dead blocks pinned
// at zero, Armijo-damped on 0.5*|F|^2. Rank-deficient Jacobians (continua) are
// handled with minimum-norm steps. Returns the full stacked state on success.
inline std::optional<Vector> solveRestricted(const TriVirusParams& params, const Support& support, const Vector& seed,
                                             const NewtonOptions& opt = {}) {
    const int n = params.nodes();
    const auto live = liveViruses(support);
    const int dim = static_cast<int>(live.size()) * n;
    if (dim == 0) return Vector::Zero(params.dimension());

    Vector x = Vector::Zero(params.dimension());
    for (int k : live) x.segment(k * n, n) = seed.segment(k * n, n);

    Vector f, r(dim), trial(dim);
    auto restrictedResidual = [&](const Vector& full, Vector& out) {
        vectorFieldKernel(params, full, f);
        for (std::size_t a = 0; a < live.size(); ++a) out.segment(a * n, n) = f.segment(live[a] * n, n);
        return 0.5 * out.squaredNorm();
    };
    double merit = restrictedResidual(x, r);
    for (int it = 0; it < opt.maxIterations && r.lpNorm<Eigen::Infinity>() > opt.tolerance; ++it) {
        const Matrix jf = jacobianKernel(params, x);
        Matrix jr(dim, dim);
        for (std::size_t a = 0; a < live.size(); ++a)
            for (std::size_t b = 0; b < live.size(); ++b)
                jr.block(a * n, b * n, n, n) = jf.block(live[a] * n, live[b] * n, n, n);
        const Vector d = jr.completeOrthogonalDecomposition().solve(-r);
        if (!d.allFinite()) return std::nullopt;
        double t = 1.0;
        bool accepted = false;
        Vector xt = x;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            xt = x;
            for (std::size_t a = 0; a < live.size(); ++a) xt.segment(live[a] * n, n) += t * d.segment(a * n, n);
            const double mt = restrictedResidual(xt, trial);
            if (std::isfinite(mt) && mt <= (1.0 - 2e-4 * t) * merit) {
                accepted = true;
                x = xt;
                r = trial;
                merit = mt;
                break;
            }
        }
        if (!accepted) break;
        if (x.lpNorm<Eigen::Infinity>() > 1e3) return std::nullopt;
    }
    if (!(r.lpNorm<Eigen::Infinity>() < tol::equilibriumResidual)) return std::nullopt;
    return x;
}

struct ContinuumReport {
    Support support;
    std::vector<SystemState> samples;  // distinct roots found on the suspected continuum
    double midpointResidual = 0.0;
};

struct BivirusResult {
    std::vector<Equilibrium> equilibria;  // interior roots of the pair, embedded in the full system
    bool continuumSuspected = false;
    std::optional<ContinuumReport> continuum;
    std::vector<SystemState> limits;  // endpoints of the two extreme simulations
};

namespace detail {

inline double midpointResidual(const TriVirusParams& p, const SystemState& a, const SystemState& b) {
    Vector f;
    vectorFieldKernel(p, 0.5 * (a.stacked() + b.stacked()), f);
    return f.lpNorm<Eigen::Infinity>();
}

// Adds `eq` unless an existing root lies within the dedup distance; the root
// with the smaller residual represents a cluster. Returns true for a new root.
inline bool mergeRoot(std::vector<Equilibrium>& roots, Equilibrium eq) {
    for (auto& r : roots) {
        if ((r.state.stacked() - eq.state.stacked()).lpNorm<Eigen::Infinity>() < tol::dedup) {
            if (eq.residual < r.residual) r = std::move(eq);
            return false;
        }
    }
    roots.push_back(std::move(eq));
    return true;
}

// Moves the roots into a continuum report if any pair of them has a root-like midpoint.
inline std::optional<ContinuumReport> detectContinuum(const TriVirusParams& p, const Support& s,
                                                      const std::vector<Equilibrium>& roots) {
    for (std::size_t a = 0; a < roots.size(); ++a)
        for (std::size_t b = a + 1; b < roots.size(); ++b) {
            const double mid = midpointResidual(p, roots[a].state, roots[b].state);
            if (mid < tol::continuumMidpoint) {
                ContinuumReport rep{s, {}, mid};
                for (const auto& r : roots) rep.samples.push_back(r.state);
                return rep;
            }
        }
    return std::nullopt;
}

}  // namespace detail

struct BivirusOptions {
    double epsilon = 1e-3;
    double horizon = 20000.0;
};

// 2-coexistence equilibria of viruses i and j (0-based) with every other virus
// extinct. The pair subsystem is monotone, so the limits of the two extreme
// starts (x~^i, eps) and (eps, x~^j) bracket its equilibria; Newton is seeded
// from both limits and points between them.
inline BivirusResult bivirusCoexistence(const TriVirusParams& params, int i, int j, const BivirusOptions& opt = {}) {
    if (i == j || i < 0 || j < 0 || i >= params.viruses() || j >= params.viruses())
        throw PreconditionError("bivirusCoexistence: need two distinct virus indices");
    const auto xi = singleVirusEquilibrium(params, i);
    const auto xj = singleVirusEquilibrium(params, j);
    if (!xi || !xj) throw PreconditionError("bivirusCoexistence: both viruses must have rho(D^-1 B) > 1");

    const int n = params.nodes(), m = params.viruses();
    auto extreme = [&](int strong, const Vector& xs, int weak) {
        SystemState s(n, m);
        s.block(strong) = xs.cwiseMin(1.0 - 2.0 * opt.epsilon);
        s.block(weak).setConstant(opt.epsilon);
        return s;
    };
    SimConfig cfg;
    cfg.horizon = opt.horizon;
    cfg.sampleInterval = opt.horizon;
    BivirusResult out;
    for (const auto& start : {extreme(i, *xi, j), extreme(j, *xj, i)})
        out.limits.push_back(integrate(params, start, cfg).finalState());

    Support s(m, false);
    s[i] = s[j] = true;
    const Vector& a = out.limits[0].stacked();
    const Vector& b = out.limits[1].stacked();
    std::vector<Equilibrium> roots;
    for (double w : {0.0, 1.0, 0.5, 0.25, 0.75}) {
        if (auto root = solveRestricted(params, s, (1.0 - w) * a + w * b)) {
            SystemState st = SystemState::fromStacked(*root, m);
            if (satisfiesDichotomy(st) && liveViruses(certify(params, st).support).size() == 2)
                detail::mergeRoot(roots, certify(params, st));
        }
    }
    if (auto cont = detail::detectContinuum(params, s, roots)) {
        out.continuumSuspected = true;
        out.continuum = std::move(cont);
    } else {
        out.equilibria = std::move(roots);
    }
    return out;
}

struct EnumerationOptions {
    int starts = 100;  // random interior seeds per support pattern
    std::uint64_t seed = 1;
    bool bivirusSeeds = true;
    unsigned threads = 1;
    NewtonOptions newton;
};

struct EnumerationResult {
    std::vector<Equilibrium> equilibria;
    std::vector<ContinuumReport> continua;
    int startsUsed = 0;
    bool nondegenerate = true;
    // No new root appeared in the second half of any pattern's seed list.
    bool complete = true;
    int indexSumSaturated = 0;

    int count(EquilibriumKind k) const {
        return static_cast<int>(std::count_if(equilibria.begin(), equilibria.end(),
                                              [k](const Equilibrium& e) { return e.kind == k; }));
    }
    bool continuumSuspected() const { return !continua.empty(); }
};

inline EnumerationResult enumerateEquilibria(const TriVirusParams& params, const EnumerationOptions& opt) {
    if (!params.allIrreducible()) throw PreconditionError("enumerateEquilibria: every infection matrix must be irreducible");
    const int n = params.nodes(), m = params.viruses();
    std::vector<std::optional<Vector>> single(m);
    for (int k = 0; k < m; ++k) single[k] = singleVirusEquilibrium(params, k);

    // Known pair roots feed structured seeds for the larger patterns.
    std::vector<Vector> pairRoots;
    if (opt.bivirusSeeds) {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                if (single[i] && single[j]) {
                    auto res = bivirusCoexistence(params, i, j);
                    for (const auto& e : res.equilibria) pairRoots.push_back(e.state.stacked());
                    if (res.continuum)
                        for (const auto& s : res.continuum->samples) pairRoots.push_back(s.stacked());
                    for (const auto& l : res.limits) pairRoots.push_back(l.stacked());
                }
    }

    EnumerationResult out;
    std::mt19937_64 gen(opt.seed);
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        Support s(m, false);
        for (int k = 0; k < m; ++k) s[k] = (mask >> k) & 1u;
        const auto live = liveViruses(s);
        if (live.empty()) {
            out.equilibria.push_back(certify(params, SystemState(n, m)));
            continue;
        }

        std::vector<Vector> seeds;
        const double share = 1.0 / static_cast<double>(live.size());
        {
            Vector even = Vector::Zero(n * m);
            bool all = true;
            for (int k : live) {
                if (single[k]) even.segment(k * n, n) = share * *single[k];
                else all = false;
            }
            if (all) seeds.push_back(even);
            for (int dominant : live) {
                if (!single[dominant]) continue;
                Vector v = Vector::Zero(n * m);
                for (int k : live) {
                    const Vector base = single[k] ? *single[k] : Vector::Constant(n, 0.5);
                    v.segment(k * n, n) = (k == dominant ? 0.8 : 0.2 / std::max<std::size_t>(1, live.size() - 1)) * base;
                }
                seeds.push_back(v);
            }
            for (const auto& pr : pairRoots) {
                Vector v = Vector::Zero(n * m);
                double kept = 0.0;
                for (int k : live) kept += pr.segment(k * n, n).sum();
                if (kept == 0.0) continue;
                for (int k : live) {
                    const Vector part = pr.segment(k * n, n);
                    v.segment(k * n, n) = part.maxCoeff() > 0.0 ? Vector(0.9 * part)
                                          : (single[k] ? Vector(0.1 * *single[k]) : Vector::Constant(n, 0.05));
                }
                seeds.push_back(v);
            }
        }
        const std::size_t structured = seeds.size();
        for (int r = 0; r < opt.starts; ++r) {
            Vector v = Vector::Zero(n * m);
            for (int i = 0; i < n; ++i) {
                std::vector<double> p(live.size() + 1);
                double sum = 0.0;
                for (auto& u : p) sum += (u = openUniform(gen));
                for (std::size_t a = 0; a < live.size(); ++a) v[live[a] * n + i] = p[a] / sum;
            }
            seeds.push_back(v);
        }

        std::vector<std::optional<Vector>> roots(seeds.size());
        auto solveRange = [&](std::size_t begin, std::size_t stride) {
            for (std::size_t q = begin; q < seeds.size(); q += stride) roots[q] = solveRestricted(params, s, seeds[q], opt.newton);
        };
        const unsigned threads = std::max(1u, opt.threads);
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(solveRange, t, threads);
        solveRange(0, threads);
        for (auto& th : pool) th.join();
        out.startsUsed += static_cast<int>(seeds.size());

        std::vector<Equilibrium> found;
        const std::size_t half = structured + (seeds.size() - structured) / 2;
        for (std::size_t q = 0; q < seeds.size(); ++q) {
            if (!roots[q]) continue;
            SystemState st = SystemState::fromStacked(*roots[q], m);
            if (!satisfiesDichotomy(st)) continue;
            Equilibrium eq = certify(params, st);
            if (eq.support != s) continue;
            if (detail::mergeRoot(found, std::move(eq)) && q >= half) out.complete = false;
        }
        if (auto cont = detail::detectContinuum(params, s, found)) {
            out.continua.push_back(std::move(*cont));
            continue;
        }
        for (auto& e : found) out.equilibria.push_back(std::move(e));
    }

    for (const auto& e : out.equilibria) {
        if (e.degenerate) out.nondegenerate = false;
        else if (e.isSaturated) out.indexSumSaturated += *e.index;
    }
    if (!out.continua.empty()) out.nondegenerate = false;
    return out;
}

inline EnumerationResult enumerateEquilibria(const TriVirusParams& params, int starts, std::uint64_t seed) {
    EnumerationOptions opt;
    opt.starts = starts;
    opt.seed = seed;
    return enumerateEquilibria(params, opt);
}

struct GenericityReport {
    int trials = 0;
    int degenerateTrials = 0;  // trials with a degenerate root or a suspected continuum
    int continuumTrials = 0;
    double degenerateFraction = 0.0;
    std::vector<int> counts;            // equilibria found per trial
    std::map<int, int> countHistogram;  // count -> number of trials
};

// Multiplies every healing rate by exp(U(-scale, scale)) and re-enumerates.
inline GenericityReport genericityProbe(const TriVirusParams& base, int trials, double scale, std::uint64_t seed,
                                        int starts = 40) {
    if (!(scale >= 0.0)) throw PreconditionError("genericityProbe: scale must be nonnegative");
    GenericityReport rep;
    rep.trials = trials;
    std::mt19937_64 gen(seed);
    for (int t = 0; t < trials; ++t) {
        std::vector<VirusLayer> layers = base.layers();
        for (auto& l : layers)
            for (Eigen::Index i = 0; i < l.delta.size(); ++i)
                l.delta[i] *= std::exp(scale * (2.0 * openUniform(gen) - 1.0));
        EnumerationOptions opt;
        opt.starts = starts;
        opt.seed = seed + 1 + static_cast<std::uint64_t>(t);
        const auto res = enumerateEquilibria(TriVirusParams(std::move(layers)), opt);
        if (!res.nondegenerate) ++rep.degenerateTrials;
        if (res.continuumSuspected()) ++rep.continuumTrials;
        const int c = static_cast<int>(res.equilibria.size());
        rep.counts.push_back(c);
        ++rep.countHistogram[c];
    }
    rep.degenerateFraction = trials ? static_cast<double>(rep.degenerateTrials) / trials : 0.0;
    return rep;
}

}  // namespace trivirus
