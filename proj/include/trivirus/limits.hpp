#pragma once

#include "trivirus/equilibria.hpp"
#include "trivirus/families.hpp"
#include "trivirus/sim.hpp"

#include <optional>
#include <vector>

namespace trivirus {

// Everything a trajectory limit may be matched against.
struct KnownLimits {
    std::vector<Equilibrium> equilibria;
    std::optional<LineFamily> line;
    std::optional<PlaneFamily> plane;
};

inline constexpr double novelLimitDistance = 1e-4;

// Nearest known equilibrium (sup-norm distance) or family (Euclidean distance).
inline LimitClassification classifyLimit(const Trajectory& traj, const KnownLimits& known) {
    if (traj.termination != Termination::Converged) throw PreconditionError("classifyLimit: trajectory has not converged");
    const SystemState& x = traj.finalState();
    LimitClassification best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < known.equilibria.size(); ++i) {
        const double d = (known.equilibria[i].state.stacked() - x.stacked()).lpNorm<Eigen::Infinity>();
        if (d < best.distance) {
            best = {LimitClassification::Target::Equilibrium, known.equilibria[i].label(), static_cast<int>(i), d, {}};
        }
    }
    if (known.line) {
        const auto fd = distanceToFamily(*known.line, x);
        if (fd.distance < best.distance)
            best = {LimitClassification::Target::Line, "line", -1, fd.distance,
                    {fd.coordinates.begin(), fd.coordinates.end()}};
    }
    if (known.plane) {
        const auto fd = distanceToFamily(*known.plane, x);
        if (fd.distance < best.distance)
            best = {LimitClassification::Target::Plane, "plane", -1, fd.distance,
                    {fd.coordinates.begin(), fd.coordinates.end()}};
    }
    if (!(best.distance <= novelLimitDistance)) {
        best.target = LimitClassification::Target::Novel;
        best.label = "novel";
        best.equilibriumIndex = -1;
        best.coordinates.clear();
    }
    return best;
}

}  // namespace trivirus
