#pragma once

#include "trivirus/spectral.hpp"
#include "trivirus/types.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace trivirus {

// One virus layer of the network: healing rates (diagonal of D) and infection matrix B.
struct VirusLayer {
    Vector delta;
    Matrix beta;
};

class TriVirusParams {
public:
    TriVirusParams() = default;

    explicit TriVirusParams(std::vector<VirusLayer> layers) : layers_(std::move(layers)) { validate(); }

    static TriVirusParams unitHealing(const std::vector<Matrix>& betas) {
        std::vector<VirusLayer> layers;
        for (const auto& b : betas) layers.push_back({Vector::Ones(b.rows()), b});
        return TriVirusParams(std::move(layers));
    }

    int nodes() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().delta.size()); }
    int viruses() const { return static_cast<int>(layers_.size()); }
    int dimension() const { return nodes() * viruses(); }

    const VirusLayer& layer(int k) const { return layers_.at(static_cast<std::size_t>(k)); }
    const std::vector<VirusLayer>& layers() const { return layers_; }
    const Vector& delta(int k) const { return layer(k).delta; }
    const Matrix& beta(int k) const { return layer(k).beta; }

    // D^{-1} B for virus k.
    Matrix normalizedInfection(int k) const { return delta(k).cwiseInverse().asDiagonal() * beta(k); }

    bool irreducible(int k) const { return isIrreducible(beta(k)); }

    bool allIrreducible() const {
        for (int k = 0; k < viruses(); ++k)
            if (!irreducible(k)) return false;
        return true;
    }

    bool hasUnitHealing() const {
        for (const auto& l : layers_)
            if ((l.delta.array() != 1.0).any()) return false;
        return true;
    }

    TriVirusParams restrictedTo(const std::vector<int>& keep) const {
        std::vector<VirusLayer> out;
        for (int k : keep) out.push_back(layer(k));
        return TriVirusParams(std::move(out));
    }

    // Replaces each (D, B) with (I, D^{-1}B); equilibria keep their location.
    TriVirusParams withUnitHealing() const {
        std::vector<VirusLayer> out;
        for (int k = 0; k < viruses(); ++k) out.push_back({Vector::Ones(nodes()), normalizedInfection(k)});
        return TriVirusParams(std::move(out));
    }

    // Virus k of the result is virus perm[k] of this system.
    TriVirusParams permuted(const std::vector<int>& perm) const {
        if (static_cast<int>(perm.size()) != viruses()) throw PreconditionError("permuted: wrong permutation length");
        return restrictedTo(perm);
    }

    void requireThreeViruses(const char* who) const {
        if (viruses() != 3) throw PreconditionError(std::string(who) + ": requires exactly three viruses");
    }

private:
    void validate() const {
        if (layers_.empty()) throw PreconditionError("TriVirusParams: no virus layers");
        const auto n = layers_.front().delta.size();
        if (n < 1) throw PreconditionError("TriVirusParams: n must be at least 1");
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const auto& l = layers_[k];
            std::ostringstream who;
            who << "TriVirusParams: virus " << k + 1;
            if (l.delta.size() != n || l.beta.rows() != n || l.beta.cols() != n)
                throw PreconditionError(who.str() + " has inconsistent dimensions");
            if (!l.delta.allFinite() || !l.beta.allFinite()) throw PreconditionError(who.str() + " has non-finite entries");
            if ((l.delta.array() <= 0.0).any()) throw PreconditionError(who.str() + " has a non-positive healing rate");
            if ((l.beta.array() < 0.0).any()) throw PreconditionError(who.str() + " has a negative infection rate");
        }
    }

    std::vector<VirusLayer> layers_;
};

// Stacked infection fractions (x^1, ..., x^m), each block of length n.
class SystemState {
public:
    SystemState() = default;
    SystemState(int nodes, int viruses) : n_(nodes), m_(viruses), x_(Vector::Zero(nodes * viruses)) {}

    static SystemState fromStacked(const Vector& stacked, int viruses) {
        if (viruses < 1 || stacked.size() % viruses != 0) throw PreconditionError("SystemState: bad stacked length");
        SystemState s(static_cast<int>(stacked.size() / viruses), viruses);
        s.x_ = stacked;
        return s;
    }

    static SystemState fromBlocks(const std::vector<Vector>& blocks) {
        if (blocks.empty()) throw PreconditionError("SystemState: no blocks");
        SystemState s(static_cast<int>(blocks.front().size()), static_cast<int>(blocks.size()));
        for (int k = 0; k < s.m_; ++k) {
            if (blocks[k].size() != s.n_) throw PreconditionError("SystemState: blocks differ in length");
            s.block(k) = blocks[k];
        }
        return s;
    }

    int nodes() const { return n_; }
    int viruses() const { return m_; }

    Eigen::VectorBlock<Vector> block(int k) { return x_.segment(static_cast<Eigen::Index>(k) * n_, n_); }
    Eigen::VectorBlock<const Vector> block(int k) const { return x_.segment(static_cast<Eigen::Index>(k) * n_, n_); }

    const Vector& stacked() const { return x_; }
    Vector& stacked() { return x_; }

    // Sum of all virus blocks: the infected share of each node.
    Vector total() const {
        Vector s = Vector::Zero(n_);
        for (int k = 0; k < m_; ++k) s += block(k);
        return s;
    }

    bool operator==(const SystemState& o) const { return n_ == o.n_ && m_ == o.m_ && x_ == o.x_; }

private:
    int n_ = 0;
    int m_ = 0;
    Vector x_;
};

struct DomainViolation {
    int node = 0;
    std::optional<int> virus;  // absent means the per-node sum constraint
    double value = 0.0;
    double magnitude = 0.0;
};

inline std::vector<DomainViolation> validateState(const SystemState& state, double tolerance = tol::domain) {
    std::vector<DomainViolation> out;
    for (int i = 0; i < state.nodes(); ++i) {
        double sum = 0.0;
        for (int k = 0; k < state.viruses(); ++k) {
            const double v = state.block(k)[i];
            sum += v;
            if (!std::isfinite(v)) {
                out.push_back({i, k, v, std::numeric_limits<double>::infinity()});
            } else if (v < -tolerance) {
                out.push_back({i, k, v, -v});
            } else if (v > 1.0 + tolerance) {
                out.push_back({i, k, v, v - 1.0});
            }
        }
        if (std::isfinite(sum) && sum > 1.0 + tolerance) out.push_back({i, std::nullopt, sum, sum - 1.0});
    }
    return out;
}

inline std::string describe(const DomainViolation& v) {
    std::ostringstream os;
    os << "node " << v.node + 1 << ", ";
    if (v.virus) os << "virus " << *v.virus + 1;
    else os << "sum";
    os << ": value " << v.value << " (off by " << v.magnitude << ")";
    return os.str();
}

class DomainError : public Error {
public:
    explicit DomainError(std::vector<DomainViolation> v)
        : Error("state outside the domain: " + (v.empty() ? std::string("?") : describe(v.front()))),
          violations_(std::move(v)) {}
    const std::vector<DomainViolation>& violations() const { return violations_; }

private:
    std::vector<DomainViolation> violations_;
};

// Unchecked kernel shared by the integrator and Newton solvers. `x` and `out`
// are stacked vectors of length m*n; `out` must not alias `x`.
inline void vectorFieldKernel(const TriVirusParams& p, const Vector& x, Vector& out) {
    const int n = p.nodes(), m = p.viruses();
    Vector healthy = Vector::Ones(n);
    for (int k = 0; k < m; ++k) healthy -= x.segment(k * n, n);
    out.resize(x.size());
    for (int k = 0; k < m; ++k) {
        const auto xk = x.segment(k * n, n);
        out.segment(k * n, n) =
            healthy.cwiseProduct(p.beta(k) * xk) - p.delta(k).cwiseProduct(xk);
    }
}

inline Vector evalVectorField(const TriVirusParams& params, const SystemState& state, double tolerance = tol::domain) {
    if (state.nodes() != params.nodes() || state.viruses() != params.viruses())
        throw PreconditionError("evalVectorField: state and params differ in shape");
    auto violations = validateState(state, tolerance);
    if (!violations.empty()) throw DomainError(std::move(violations));
    Vector out;
    vectorFieldKernel(params, state.stacked(), out);
    return out;
}

inline Matrix jacobianKernel(const TriVirusParams& p, const Vector& x) {
    const int n = p.nodes(), m = p.viruses();
    Vector healthy = Vector::Ones(n);
    for (int k = 0; k < m; ++k) healthy -= x.segment(k * n, n);
    Matrix j = Matrix::Zero(m * n, m * n);
    for (int k = 0; k < m; ++k) {
        const Vector bx = p.beta(k) * x.segment(k * n, n);
        for (int l = 0; l < m; ++l) j.block(k * n, l * n, n, n).diagonal() = -bx;
        j.block(k * n, k * n, n, n) += healthy.asDiagonal() * p.beta(k);
        j.block(k * n, k * n, n, n).diagonal() -= p.delta(k);
    }
    return j;
}

inline Matrix evalJacobian(const TriVirusParams& params, const SystemState& state) {
    if (state.nodes() != params.nodes() || state.viruses() != params.viruses())
        throw PreconditionError("evalJacobian: state and params differ in shape");
    if (!state.stacked().allFinite()) throw PreconditionError("evalJacobian: non-finite state");
    return jacobianKernel(params, state.stacked());
}

}  // namespace trivirus
