#pragma once

#include "trivirus/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace trivirus {

struct Dopri5Options {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initialStep = 0.0;  // 0 selects a step from the local derivative scale
    double maxStep = std::numeric_limits<double>::infinity();
    long maxRejectsInARow = 200;
};

// Dormand-Prince 5(4) with PI step-size control and the classic 4th-order
// continuous extension. `Rhs` is callable as rhs(const Vector& y, Vector& dy)
// for an autonomous system.
template <class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, Dopri5Options opt) : rhs_(std::move(rhs)), opt_(opt) {}

    void start(double t0, const Vector& y0) {
        t_ = t0;
        y_ = y0;
        rhs_(y_, k1_);
        h_ = opt_.initialStep > 0.0 ? opt_.initialStep : initialStep();
        facOld_ = 1e-4;
        lastRejected_ = false;
        accepted_ = rejected_ = 0;
    }

    // Replace the current state (e.g. after a projection) without advancing time.
    void resetState(const Vector& y) {
        y_ = y;
        rhs_(y_, k1_);
    }

    // Advance by one accepted step, never past tEnd. Returns false if the
    // controller gave up (step underflow or too many consecutive rejections).
    bool step(double tEnd) {
        const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
        const double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
        long rejectsInARow = 0;
        for (;;) {
            double h = std::min(h_, opt_.maxStep);
            bool last = false;
            if (t_ + h >= tEnd) {
                h = tEnd - t_;
                last = true;
            }
            if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_))) return false;
            attempt(h);
            const double err = errorNorm(h);
            const double fac11 = std::pow(err, expo1);
            if (err <= 1.0) {
                double fac = fac11 / std::pow(facOld_, beta);
                fac = std::max(facc2, std::min(facc1, fac / safe));
                double hnew = h / fac;
                facOld_ = std::max(err, 1e-4);
                if (lastRejected_) hnew = std::min(hnew, h);
                lastRejected_ = false;
                buildDense(h);
                tOld_ = t_;
                t_ = last ? tEnd : t_ + h;
                y_.swap(yNew_);
                k1_.swap(k7_);
                hLast_ = h;
                if (!last || hnew > h_) h_ = hnew;
                ++accepted_;
                return true;
            }
            // A non-finite error estimate shrinks the step by the maximal factor.
            h_ = std::isfinite(err) ? h / std::min(facc1, fac11 / safe) : h / facc1;
            lastRejected_ = true;
            ++rejected_;
            if (++rejectsInARow > opt_.maxRejectsInARow) return false;
        }
    }

    // Continuous extension on the last accepted step [tOld, t].
    Vector dense(double t) const {
        const double theta = (t - tOld_) / hLast_, theta1 = 1.0 - theta;
        return r1_ + theta * (r2_ + theta1 * (r3_ + theta * (r4_ + theta1 * r5_)));
    }

    void setMaxStep(double h) { opt_.maxStep = h; }

    double time() const { return t_; }
    double previousTime() const { return tOld_; }
    const Vector& state() const { return y_; }
    const Vector& derivative() const { return k1_; }
    long accepted() const { return accepted_; }
    long rejected() const { return rejected_; }

private:
    void attempt(double h) {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                                a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                                a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                                a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
        tmp_ = y_ + h * a21 * k1_;
        rhs_(tmp_, k2_);
        tmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
        rhs_(tmp_, k3_);
        tmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs_(tmp_, k4_);
        tmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(tmp_, k5_);
        tmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(tmp_, k6_);
        yNew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
        rhs_(yNew_, k7_);
    }

    double errorNorm(double h) const {
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
        double sum = 0.0;
        const Eigen::Index n = y_.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
            const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(yNew_[i]));
            sum += (e / sk) * (e / sk);
        }
        return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
    }

    void buildDense(double h) {
        static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
        r1_ = y_;
        r2_ = yNew_ - y_;
        r3_ = h * k1_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    }

    double initialStep() {
        const Eigen::Index n = y_.size();
        double dnf = 0.0, dny = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y_[i]);
            dnf += (k1_[i] / sk) * (k1_[i] / sk);
            dny += (y_[i] / sk) * (y_[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min(h, opt_.maxStep);
        tmp_ = y_ + h * k1_;
        rhs_(tmp_, k2_);
        double der2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y_[i]);
            const double d = (k2_[i] - k1_[i]) / sk;
            der2 += d * d;
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        return std::min({100.0 * h, h1, opt_.maxStep});
    }

    Rhs rhs_;
    Dopri5Options opt_;
    double t_ = 0.0, tOld_ = 0.0, h_ = 0.0, hLast_ = 1.0, facOld_ = 1e-4;
    bool lastRejected_ = false;
    long accepted_ = 0, rejected_ = 0;
    Vector y_, yNew_, tmp_, k1_, k2_, k3_, k4_, k5_, k6_, k7_;
    Vector r1_, r2_, r3_, r4_, r5_;
};

}  // namespace trivirus
