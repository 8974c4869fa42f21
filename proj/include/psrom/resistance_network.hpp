#pragma once

#include <span>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/network_solver.hpp"

namespace psrom {

enum class CoefficientSource { Fitted, PoiseuilleFallback, RecoveryPoiseuille };

const char* coefficient_source_name(CoefficientSource source);
CoefficientSource parse_coefficient_source(const std::string& name);

/// Affine segment resistance R = a + b Q.
struct EdgeCoefficients {
  double a = 0.0;  // dyn s/cm^5
  double b = 0.0;  // dyn s^2/cm^8
  CoefficientSource source = CoefficientSource::Fitted;

  /// Negative on strongly recovering expansions; rbfs guards the series sum.
  double resistance(double flow) const { return a + b * flow; }
};

struct EffectiveResistanceField {
  // Net resistance downstream of each point; equals the outlet resistance at outlets.
  std::vector<double> downstream;
  // Edge resistance plus downstream resistance of its distal point: what the
  // parent sees through that edge. Slot 0 is unused.
  std::vector<double> through;
};

/// Per-edge resistances a + b Q at the given flows.
std::vector<double> edge_resistances(std::span<const EdgeCoefficients> coeffs,
                                     std::span<const double> flows);

/// Outlet resistances laid out per point (zero at non-outlets).
std::vector<double> outlet_resistance_vector(const CenterlineTree& tree,
                                             const BoundaryConditionSet& bc);

// Lower bound on edge + downstream resistance as a fraction of the
// downstream resistance, so a recovering edge never flips the sign.
inline constexpr double kThroughResistanceGuard = 0.5;

/// Leaf-to-ostium accumulation: series within segments, parallel at
/// bifurcations. Ids are topologically ordered, so a descending sweep visits
/// every point after all of its children.
EffectiveResistanceField rbfs_effective_resistance(const CenterlineTree& tree,
                                                   std::span<const double> edge_r,
                                                   std::span<const double> outlet_r);

/// Ostium-to-leaf flow distribution. At a bifurcation each daughter gets
/// Q_m * R_eff,m / R_through,d * gamma_d, then both are rescaled so they sum
/// to Q_m. Returns per-edge flows with the ostial flow in slot 0.
std::vector<double> dfs_flow_distribution(const CenterlineTree& tree,
                                          const EffectiveResistanceField& field,
                                          std::span<const double> gamma, double ostial_flow);

}  // namespace psrom
