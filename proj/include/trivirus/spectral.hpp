#pragma once

#include "trivirus/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace trivirus {

inline ComplexVector eigenvalues(const Matrix& m) {
    requireFinite(m, "eigenvalues");
    if (m.rows() != m.cols()) throw PreconditionError("eigenvalues: matrix is not square");
    if (m.rows() == 0) return ComplexVector(0);
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: QR iteration did not converge");
    return solver.eigenvalues();
}

inline double spectralRadius(const Matrix& m) {
    if ((m.array() < 0.0).any()) throw PreconditionError("spectralRadius: matrix has a negative entry");
    const ComplexVector ev = eigenvalues(m);
    double r = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev[i]));
    return r;
}

inline double spectralAbscissa(const Matrix& m) {
    const ComplexVector ev = eigenvalues(m);
    double s = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) s = std::max(s, ev[i].real());
    return s;
}

// Kosaraju on the digraph with an edge i -> j whenever m(i, j) > 0 exactly.
// Returns a component id per vertex.
inline std::vector<int> stronglyConnectedComponents(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<int> order;
    order.reserve(n);
    std::vector<char> seen(n, 0);
    std::vector<std::pair<int, int>> stack;
    for (int root = 0; root < n; ++root) {
        if (seen[root]) continue;
        seen[root] = 1;
        stack.emplace_back(root, 0);
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            bool pushed = false;
            while (next < n) {
                const int w = next++;
                if (m(v, w) > 0.0 && !seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, 0);
                    pushed = true;
                    break;
                }
            }
            if (!pushed && stack.back().second >= n) {
                order.push_back(stack.back().first);
                stack.pop_back();
            }
        }
    }
    std::vector<int> comp(n, -1);
    int count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] >= 0) continue;
        std::vector<int> todo{*it};
        comp[*it] = count;
        while (!todo.empty()) {
            const int v = todo.back();
            todo.pop_back();
            for (int u = 0; u < n; ++u) {
                if (m(u, v) > 0.0 && comp[u] < 0) {
                    comp[u] = count;
                    todo.push_back(u);
                }
            }
        }
        ++count;
    }
    return comp;
}

inline bool isIrreducible(const Matrix& m) {
    if (m.rows() != m.cols()) throw PreconditionError("isIrreducible: matrix is not square");
    if (m.rows() == 0) return false;
    const auto comp = stronglyConnectedComponents(m);
    return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

// Entrywise partial order: A >> B strict everywhere, A > B means A >= B with A != B.
enum class Order { StrictlyGreater, Greater, GreaterEqual, Incomparable };

inline const char* toString(Order o) {
    switch (o) {
        case Order::StrictlyGreater: return ">>";
        case Order::Greater: return ">";
        case Order::GreaterEqual: return ">=";
        case Order::Incomparable: return "incomparable";
    }
    return "?";
}

inline Order elementwiseGreater(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw PreconditionError("elementwiseGreater: shape mismatch");
    if ((a.array() < b.array()).any()) return Order::Incomparable;
    if ((a.array() > b.array()).all()) return Order::StrictlyGreater;
    if ((a.array() > b.array()).any()) return Order::Greater;
    return Order::GreaterEqual;
}

// True when the verdict implies the strict relation A > B.
inline bool impliesGreater(Order o) { return o == Order::StrictlyGreater || o == Order::Greater; }

struct SpectralSummary {
    double spectralRadius = 0.0;
    double spectralAbscissa = 0.0;
    std::optional<Vector> dominantRightVector;
    std::optional<Vector> dominantLeftVector;
    bool isIrreducible = false;
};

namespace detail {
// Eigenvector for the eigenvalue of largest real part, made nonnegative and
// scaled to unit max-norm. Absent when that eigenvalue is not real or its
// eigenvector changes sign.
inline std::optional<Vector> dominantRealVector(const Matrix& m) {
    Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) throw NumericalError("dominant eigenvector: QR iteration failed");
    const ComplexVector ev = solver.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (ev[i].real() > ev[best].real()) best = i;
    if (std::abs(ev[best].imag()) > 1e-10 * std::max(1.0, std::abs(ev[best]))) return std::nullopt;
    Vector v = solver.eigenvectors().col(best).real();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    v /= v[arg];
    if ((v.array() < -1e-12).any()) return std::nullopt;
    return v.cwiseMax(0.0);
}
}  // namespace detail

inline SpectralSummary spectralSummary(const Matrix& m) {
    requireFinite(m, "spectralSummary");
    SpectralSummary out;
    const ComplexVector ev = eigenvalues(m);
    double r = 0.0, s = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        r = std::max(r, std::abs(ev[i]));
        s = std::max(s, ev[i].real());
    }
    out.spectralRadius = r;
    out.spectralAbscissa = s;
    Matrix pattern = m;
    pattern.diagonal().setZero();
    out.isIrreducible = isIrreducible(pattern.cwiseAbs());
    out.dominantRightVector = detail::dominantRealVector(m);
    out.dominantLeftVector = detail::dominantRealVector(m.transpose());
    return out;
}

struct PerronPair {
    double value = 0.0;
    Vector vector;  // strictly positive, max entry 1
};

// Perron root and vector of a nonnegative irreducible matrix.
inline PerronPair perron(const Matrix& m) {
    if ((m.array() < 0.0).any()) throw PreconditionError("perron: matrix has a negative entry");
    if (!isIrreducible(m)) throw PreconditionError("perron: matrix is reducible");
    auto v = detail::dominantRealVector(m);
    if (!v || (v->array() <= 0.0).any()) throw NumericalError("perron: eigenvector is not strictly positive");
    return {spectralRadius(m), *v};
}

struct PowerIterationResult {
    double estimate = 0.0;
    double lower = 0.0;  // Collatz-Wielandt bounds on rho
    double upper = 0.0;
    int iterations = 0;
    Vector vector;
};

// Power iteration on the primitive shift M + I; used to cross-check the dense
// eigensolver on nonnegative irreducible matrices.
inline PowerIterationResult powerIterationRadius(const Matrix& m, double relTol = 1e-12, int maxIter = 200000) {
    if ((m.array() < 0.0).any()) throw PreconditionError("powerIterationRadius: negative entry");
    if (!isIrreducible(m)) throw PreconditionError("powerIterationRadius: matrix is reducible");
    const Eigen::Index n = m.rows();
    const Matrix a = m + Matrix::Identity(n, n);
    Vector x = Vector::Ones(n);
    PowerIterationResult out;
    for (int it = 1; it <= maxIter; ++it) {
        const Vector y = a * x;
        const Vector ratio = y.cwiseQuotient(x);
        out.lower = ratio.minCoeff() - 1.0;
        out.upper = ratio.maxCoeff() - 1.0;
        out.iterations = it;
        x = y / y.maxCoeff();
        if (out.upper - out.lower <= relTol * std::max(1.0, std::abs(out.upper))) break;
    }
    out.estimate = 0.5 * (out.lower + out.upper);
    out.vector = x;
    return out;
}

struct MetzlerClassification {
    bool isMetzler = false;
    bool isHurwitz = false;
    bool isSingularMMatrixNegation = false;
    double abscissa = 0.0;
};

inline MetzlerClassification classifyMetzler(const Matrix& m, double zeroTol = tol::band) {
    MetzlerClassification c;
    c.abscissa = spectralAbscissa(m);
    c.isMetzler = true;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < 0.0) c.isMetzler = false;
    c.isHurwitz = c.abscissa < 0.0;
    c.isSingularMMatrixNegation = c.isMetzler && std::abs(c.abscissa) <= zeroTol;
    return c;
}

}  // namespace trivirus
