#pragma once

#include "trivirus/equilibria.hpp"
#include "trivirus/model.hpp"
#include "trivirus/sim.hpp"
#include "trivirus/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace trivirus {

// C = diag(z) diag(Mz)^{-1} M, the rescaling of M that has z as a fixed vector.
inline Matrix makeStochasticLikeC(const Vector& z, const Matrix& m) {
    if (z.size() != m.rows() || m.rows() != m.cols()) throw PreconditionError("makeStochasticLikeC: dimension mismatch");
    if ((z.array() <= 0.0).any()) throw PreconditionError("makeStochasticLikeC: z must be strictly positive");
    if ((m.array() < 0.0).any() || !isIrreducible(m))
        throw PreconditionError("makeStochasticLikeC: pattern matrix must be nonnegative and irreducible");
    const Vector mz = m * z;
    if ((mz.array() <= 0.0).any()) throw PreconditionError("makeStochasticLikeC: Mz has a zero entry");
    return z.cwiseQuotient(mz).asDiagonal() * m;
}

enum class Attractivity { Attractive, Unstable, Inconclusive };

inline const char* toString(Attractivity a) {
    switch (a) {
        case Attractivity::Attractive: return "attractive";
        case Attractivity::Unstable: return "unstable";
        case Attractivity::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace detail {
inline void requireIrreducibleNonnegative(const Matrix& b, const char* who) {
    if ((b.array() < 0.0).any() || !isIrreducible(b))
        throw PreconditionError(std::string(who) + ": matrix must be nonnegative and irreducible");
}
}  // namespace detail

// Equilibria (b z, (1 - b) z, 0) for b in [0, 1] with unit healing rates.
struct LineFamily {
    Vector z;
    Matrix b1, c, b2, b3;
    double abscissa = 0.0;  // s(-I + (I - Z)B^3)
    double radius = 0.0;    // rho((I - Z)B^3)
    Attractivity attractivity = Attractivity::Inconclusive;
    double maxResidual = 0.0;

    TriVirusParams params() const { return TriVirusParams::unitHealing({b1, b2, b3}); }

    SystemState point(double beta1) const {
        return SystemState::fromBlocks({beta1 * z, (1.0 - beta1) * z, Vector::Zero(z.size())});
    }
};

inline LineFamily buildLineFamily(const Matrix& b1, const Matrix& m, const Matrix& b3) {
    detail::requireIrreducibleNonnegative(b1, "buildLineFamily(B1)");
    detail::requireIrreducibleNonnegative(m, "buildLineFamily(M)");
    detail::requireIrreducibleNonnegative(b3, "buildLineFamily(B3)");
    const auto n = b1.rows();
    if (m.rows() != n || b3.rows() != n) throw PreconditionError("buildLineFamily: dimension mismatch");
    const auto z = singleVirusEquilibrium(Vector::Ones(n), b1);
    if (!z) throw PreconditionError("buildLineFamily: rho(B1) <= 1, so z does not exist");

    LineFamily f;
    f.z = *z;
    f.b1 = b1;
    f.b3 = b3;
    f.c = makeStochasticLikeC(f.z, m);
    f.b2 = (Vector::Ones(n) - f.z).cwiseInverse().asDiagonal() * f.c;
    const Matrix reduced = (Vector::Ones(n) - f.z).asDiagonal() * b3;
    f.radius = spectralRadius(reduced);
    f.abscissa = spectralAbscissa(reduced - Matrix::Identity(n, n));
    f.attractivity = f.abscissa < -tol::band  ? Attractivity::Attractive
                     : f.abscissa > tol::band ? Attractivity::Unstable
                                              : Attractivity::Inconclusive;
    const TriVirusParams p = f.params();
    for (double b : {0.0, 0.25, 0.5, 0.75, 1.0})
        f.maxResidual = std::max(f.maxResidual, evalVectorField(p, f.point(b)).lpNorm<Eigen::Infinity>());
    if (f.maxResidual >= 1e-9) throw NumericalError("buildLineFamily: line points are not equilibria");
    return f;
}

enum class PlaneMode { IdenticalViruses, GeneralCzHat };

// Equilibria (a1 v, a2 v, a3 v) over the unit simplex, v the anchor vector.
struct PlaneFamily {
    PlaneMode mode = PlaneMode::IdenticalViruses;
    Vector anchor;  // x~ for identical viruses, z for the general construction
    TriVirusParams params;
    // General construction only.
    Matrix c, cHat;
    double maxResidual = 0.0;

    SystemState point(const std::array<double, 3>& alpha) const {
        return SystemState::fromBlocks({alpha[0] * anchor, alpha[1] * anchor, alpha[2] * anchor});
    }
};

namespace detail {
inline void checkPlaneResidual(PlaneFamily& f) {
    const std::array<std::array<double, 3>, 10> sample{{{1, 0, 0},
                                                         {0, 1, 0},
                                                         {0, 0, 1},
                                                         {0.5, 0.5, 0},
                                                         {0.5, 0, 0.5},
                                                         {0, 0.5, 0.5},
                                                         {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                         {0.2, 0.3, 0.5},
                                                         {0.7, 0.1, 0.2},
                                                         {0.05, 0.9, 0.05}}};
    for (const auto& a : sample)
        f.maxResidual = std::max(f.maxResidual, evalVectorField(f.params, f.point(a)).lpNorm<Eigen::Infinity>());
    if (f.maxResidual >= 1e-9) throw NumericalError("plane family: sampled points are not equilibria");
}
}  // namespace detail

// Three identical copies of one virus (D, B).
inline PlaneFamily buildIdenticalPlane(const Vector& delta, const Matrix& beta) {
    detail::requireIrreducibleNonnegative(beta, "buildIdenticalPlane");
    const auto x = singleVirusEquilibrium(delta, beta);
    if (!x) throw PreconditionError("buildIdenticalPlane: rho(D^-1 B) <= 1");
    PlaneFamily f;
    f.mode = PlaneMode::IdenticalViruses;
    f.anchor = *x;
    f.params = TriVirusParams({{delta, beta}, {delta, beta}, {delta, beta}});
    detail::checkPlaneResidual(f);
    return f;
}

// B^2 = (I - Z)^{-1} C and B^3 = (I - Z)^{-1} C^, with C and C^ rescaled from
// two different pattern matrices so that both fix z.
inline PlaneFamily buildGeneralPlane(const Matrix& b1, const Matrix& m, const Matrix& mHat) {
    detail::requireIrreducibleNonnegative(b1, "buildGeneralPlane(B1)");
    const auto n = b1.rows();
    const auto z = singleVirusEquilibrium(Vector::Ones(n), b1);
    if (!z) throw PreconditionError("buildGeneralPlane: rho(B1) <= 1, so z does not exist");
    PlaneFamily f;
    f.mode = PlaneMode::GeneralCzHat;
    f.anchor = *z;
    f.c = makeStochasticLikeC(*z, m);
    f.cHat = makeStochasticLikeC(*z, mHat);
    if ((f.c - f.cHat).lpNorm<Eigen::Infinity>() == 0.0)
        throw PreconditionError("buildGeneralPlane: C^ equals C, so B^2 = B^3 and the construction degenerates");
    const Matrix scale = (Vector::Ones(n) - *z).cwiseInverse().asDiagonal();
    f.params = TriVirusParams::unitHealing({b1, scale * f.c, scale * f.cHat});
    detail::checkPlaneResidual(f);
    return f;
}

struct FamilyDistance {
    double distance = 0.0;
    std::array<double, 3> coordinates{};  // (b, 1 - b, 0) on a line, alpha on a plane
};

inline FamilyDistance distanceToFamily(const LineFamily& f, const SystemState& s) {
    const Vector& z = f.z;
    const double zz = z.squaredNorm();
    const double b = std::clamp((s.block(0).dot(z) - s.block(1).dot(z) + zz) / (2.0 * zz), 0.0, 1.0);
    const double d = (s.stacked() - f.point(b).stacked()).norm();
    return {d, {b, 1.0 - b, 0.0}};
}

// Euclidean projection of c onto the probability simplex (sort-based).
inline std::array<double, 3> projectToSimplex(const std::array<double, 3>& c) {
    std::array<double, 3> u = c;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (int j = 0; j < 3; ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / (j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    return {std::max(c[0] - theta, 0.0), std::max(c[1] - theta, 0.0), std::max(c[2] - theta, 0.0)};
}

inline FamilyDistance distanceToFamily(const PlaneFamily& f, const SystemState& s) {
    // |x - (a_k v)_k|^2 = |v|^2 sum_k (a_k - c_k)^2 + const with c_k = <x^k, v> / |v|^2.
    const double vv = f.anchor.squaredNorm();
    std::array<double, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = s.block(k).dot(f.anchor) / vv;
    const auto alpha = projectToSimplex(c);
    return {(s.stacked() - f.point(alpha).stacked()).norm(), alpha};
}

struct PlaneDiagnostics {
    Vector tildeU;  // left null vector of Q, normalized so tildeU' x~ = 1
    Vector p;       // diagonal of P
    Matrix r;       // R = I - x~ tildeU'
    Matrix qBar;    // P Q + Q' P
    double lambda2 = 0.0;
    double qBarSmallest = 0.0;
    std::vector<double> times;
    std::array<std::vector<double>, 3> v;      // V(t) per virus
    double maxOrthogonality = 0.0;              // max |tildeU' zeta|
    std::array<double, 3> slope{};              // least-squares slope of log V after the transient
    std::array<bool, 3> onPlane{};              // V stayed below 1e-24 throughout
};

// Lyapunov diagnostics for the identical-virus plane: Q = D - (I - X~)B,
// zeta = R x^k, V = zeta' P zeta.
inline PlaneDiagnostics planeDiagnostics(const PlaneFamily& f, const Trajectory& traj, double transient = 1.0) {
    if (f.mode != PlaneMode::IdenticalViruses) throw PreconditionError("planeDiagnostics: needs the identical-virus plane");
    const Vector& x = f.anchor;
    const auto n = x.size();
    const Matrix& b = f.params.beta(0);
    Matrix q = (Vector::Ones(n) - x).asDiagonal() * b;
    q = -q;
    q.diagonal() += f.params.delta(0);

    PlaneDiagnostics d;
    const auto perronLeft = perron(Matrix(-q.transpose() + (q.diagonal().maxCoeff() + 1.0) * Matrix::Identity(n, n)));
    d.tildeU = perronLeft.vector / perronLeft.vector.dot(x);
    d.p = d.tildeU.cwiseQuotient(x);
    d.r = Matrix::Identity(n, n) - x * d.tildeU.transpose();
    d.qBar = d.p.asDiagonal() * q + q.transpose() * d.p.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Matrix> es(d.qBar);
    d.qBarSmallest = es.eigenvalues()[0];
    d.lambda2 = n > 1 ? es.eigenvalues()[1] : 0.0;

    std::size_t past = 0;
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        d.times.push_back(traj.times[s]);
        if (traj.times[s] >= transient) ++past;
        for (int k = 0; k < 3; ++k) {
            const Vector zeta = d.r * traj.states[s].block(k);
            d.maxOrthogonality = std::max(d.maxOrthogonality, std::abs(d.tildeU.dot(zeta)));
            d.v[k].push_back(zeta.dot(d.p.cwiseProduct(zeta)));
        }
    }
    if (past < 50) throw PreconditionError("planeDiagnostics: fewer than 50 samples after the transient");
    for (int k = 0; k < 3; ++k) {
        double st = 0, sy = 0, stt = 0, sty = 0;
        int cnt = 0;
        d.onPlane[k] = std::all_of(d.v[k].begin(), d.v[k].end(), [](double v) { return v < 1e-24; });
        for (std::size_t s = 0; s < d.times.size(); ++s) {
            if (d.times[s] < transient || d.v[k][s] < 1e-24) continue;
            const double y = std::log(d.v[k][s]);
            st += d.times[s];
            sy += y;
            stt += d.times[s] * d.times[s];
            sty += d.times[s] * y;
            ++cnt;
        }
        d.slope[k] = cnt >= 2 ? (cnt * sty - st * sy) / (cnt * stt - st * st) : 0.0;
    }
    return d;
}

}  // namespace trivirus
