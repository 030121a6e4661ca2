#pragma once

#include "trivirus/integrator.hpp"
#include "trivirus/model.hpp"
#include "trivirus/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace trivirus {

struct SimConfig {
    double rtol = 1e-8;
    double atol = 1e-10;
    double horizon = 2000.0;
    double window = 10.0;                 // W: time the derivative must stay small
    double convergenceThreshold = 1e-10;  // eps_conv on the sup-norm of the vector field
    double sampleInterval = 1.0;
    double guard = 1e-12;                 // excursions up to this size are clamped
    bool stopOnConvergence = true;

    void validate() const {
        if (!(rtol > 0 && atol > 0 && horizon > 0 && window > 0 && convergenceThreshold > 0 && sampleInterval > 0 &&
              guard >= 0))
            throw PreconditionError("SimConfig: all tolerances, horizon, window and sampling must be positive");
    }
};

enum class Termination { Converged, HorizonReached, GuardTripped };

inline const char* toString(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::HorizonReached: return "horizonReached";
        case Termination::GuardTripped: return "guardTripped";
    }
    return "?";
}

struct LimitClassification {
    enum class Target { Equilibrium, Line, Plane, Novel };
    Target target = Target::Novel;
    std::string label;          // e.g. "boundary(3)", "2-coexistence(2,3)", "line", "plane", "novel"
    int equilibriumIndex = -1;  // into the known-equilibria list when target is Equilibrium
    double distance = 0.0;
    std::vector<double> coordinates;  // beta_1 triple on a line, alpha triple on a plane
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    Termination termination = Termination::HorizonReached;
    double finalDerivativeNorm = 0.0;
    double largestClampedExcursion = 0.0;
    long acceptedSteps = 0;
    long rejectedSteps = 0;
    std::vector<bool> pinned;  // virus blocks held at zero because they started there
    std::optional<LimitClassification> limit;

    const SystemState& finalState() const { return states.back(); }
    double finalTime() const { return times.back(); }
};

namespace detail {

// Largest amount by which `x` leaves the domain (0 when inside).
inline double domainExcursion(const Vector& x, int n, int m) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            const double v = x[k * n + i];
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
            worst = std::max({worst, -v, v - 1.0});
            sum += v;
        }
        worst = std::max(worst, sum - 1.0);
    }
    return worst;
}

inline void clampToDomain(Vector& x, int n, int m) {
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            double& v = x[k * n + i];
            v = std::clamp(v, 0.0, 1.0);
            sum += v;
        }
        if (sum > 1.0)
            for (int k = 0; k < m; ++k) x[k * n + i] /= sum;
    }
}

}  // namespace detail

// Sup-norm of the vector field below which the step-size cap is engaged.
inline constexpr double nearRestThreshold = 1e-5;

inline Trajectory integrate(const TriVirusParams& params, const SystemState& x0, const SimConfig& cfg = {}) {
    cfg.validate();
    if (x0.nodes() != params.nodes() || x0.viruses() != params.viruses())
        throw PreconditionError("integrate: initial state and params differ in shape");
    if (auto v = validateState(x0, tol::domain); !v.empty()) throw DomainError(std::move(v));

    const int n = params.nodes(), m = params.viruses();
    Trajectory traj;
    traj.pinned.assign(m, false);
    for (int k = 0; k < m; ++k) traj.pinned[k] = x0.block(k).maxCoeff() == 0.0;

    auto rhs = [&params, &traj, n, m](const Vector& y, Vector& dy) {
        vectorFieldKernel(params, y, dy);
        for (int k = 0; k < m; ++k)
            if (traj.pinned[k]) dy.segment(k * n, n).setZero();
    };
    Dopri5Options opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    Dopri5<decltype(rhs)> stepper(rhs, opt);
    stepper.start(0.0, x0.stacked());

    auto record = [&](double t, const Vector& y) {
        if (!traj.times.empty() && t <= traj.times.back()) return;
        traj.times.push_back(t);
        traj.states.push_back(SystemState::fromStacked(y, m));
    };
    record(0.0, x0.stacked());
    traj.finalDerivativeNorm = stepper.derivative().lpNorm<Eigen::Infinity>();
    if (traj.finalDerivativeNorm == 0.0) {
        traj.termination = Termination::Converged;
        return traj;
    }

    // Near rest the controller drifts to the stability boundary, where the
    // solution jitters at the tolerance level instead of settling. Capping
    // the step at 1/rho(J) there makes each step contract onto the equilibrium.
    long capRefreshedAt = -1;
    auto refreshStepCap = [&] {
        const ComplexVector ev = eigenvalues(jacobianKernel(params, stepper.state()));
        const double rho = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
        if (rho > 0.0) stepper.setMaxStep(1.0 / rho);
        capRefreshedAt = stepper.accepted();
    };

    long nextSample = 1;
    double belowSince = -1.0;  // start of the current small-derivative stretch; negative when none
    if (traj.finalDerivativeNorm < cfg.convergenceThreshold) belowSince = 0.0;
    traj.termination = Termination::HorizonReached;
    while (stepper.time() < cfg.horizon) {
        if (!stepper.step(cfg.horizon)) throw NumericalError("integrate: step size controller failed");
        const double t = stepper.time();
        for (double ts = nextSample * cfg.sampleInterval; ts < t; ts = ++nextSample * cfg.sampleInterval)
            record(ts, stepper.dense(ts));

        Vector y = stepper.state();
        const double excursion = detail::domainExcursion(y, n, m);
        if (excursion > cfg.guard) {
            record(t, y);
            traj.termination = Termination::GuardTripped;
            break;
        }
        if (excursion > 0.0) {
            traj.largestClampedExcursion = std::max(traj.largestClampedExcursion, excursion);
            detail::clampToDomain(y, n, m);
            stepper.resetState(y);
        }

        traj.finalDerivativeNorm = stepper.derivative().lpNorm<Eigen::Infinity>();
        if (traj.finalDerivativeNorm < nearRestThreshold &&
            (capRefreshedAt < 0 || stepper.accepted() - capRefreshedAt >= 1000))
            refreshStepCap();
        if (traj.finalDerivativeNorm < cfg.convergenceThreshold) {
            if (belowSince < 0.0) belowSince = t;
            if (cfg.stopOnConvergence && t - belowSince >= cfg.window) {
                traj.termination = Termination::Converged;
                record(t, stepper.state());
                break;
            }
        } else {
            belowSince = -1.0;
        }
        if (t >= cfg.horizon) record(t, stepper.state());
    }
    if (traj.termination == Termination::HorizonReached && belowSince >= 0.0 && stepper.time() - belowSince >= cfg.window)
        traj.termination = Termination::Converged;
    traj.acceptedSteps = stepper.accepted();
    traj.rejectedSteps = stepper.rejected();
    return traj;
}

// Uniform draw on the open interval (0, 1) from the top 53 bits, so results
// do not depend on the standard library's distribution implementation.
inline double openUniform(std::mt19937_64& gen) {
    for (;;) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

// For every node draw m + 1 uniforms p^1..p^m, p^s and set x_i^k = p^k / sum(p).
inline SystemState randomInteriorStart(int n, std::uint64_t seed, int viruses = 3) {
    if (n < 1) throw PreconditionError("randomInteriorStart: n must be at least 1");
    std::mt19937_64 gen(seed);
    SystemState s(n, viruses);
    std::vector<double> p(static_cast<std::size_t>(viruses) + 1);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (auto& v : p) sum += (v = openUniform(gen));
        for (int k = 0; k < viruses; ++k) s.block(k)[i] = p[static_cast<std::size_t>(k)] / sum;
    }
    return s;
}

// Runs independent integrations on a worker pool; results keep input order.
inline std::vector<Trajectory> integrateBatch(const TriVirusParams& params, const std::vector<SystemState>& starts,
                                              const SimConfig& cfg = {}, unsigned threads = 0) {
    std::vector<Trajectory> out(starts.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, starts.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(starts.size());
    auto worker = [&] {
        for (std::size_t i; (i = next++) < starts.size();) {
            try {
                out[i] = integrate(params, starts[i], cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline void writeCsv(std::ostream& os, const Trajectory& traj) {
    if (traj.states.empty()) return;
    const int n = traj.states.front().nodes(), m = traj.states.front().viruses();
    os << 't';
    for (int k = 1; k <= m; ++k)
        for (int i = 1; i <= n; ++i) os << ",x" << k << '_' << i;
    os << '\n';
    char buf[40];
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[r]);
        os << buf;
        const Vector& x = traj.states[r].stacked();
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", x[j]);
            os << ',' << buf;
        }
        os << '\n';
    }
}

}  // namespace trivirus
