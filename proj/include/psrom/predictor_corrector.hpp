#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/network_solver.hpp"
#include "psrom/response_surface.hpp"

namespace psrom {

struct SolverConfig {
  double tol2 = 0.02;  // relative ostial-flow change between iterates
  int max_iterations = 100;
  bool bc_scaling_enabled = true;
  // false: R = R0 * P_anchor / P (dilation lowers outlet resistance).
  bool invert_pressure_ratio = false;
  RecoveryOptions recovery;

  void validate() const;
};

/// Per-outlet R_scaled = R_orig * P_anchor / P_current (or the inverse ratio).
BoundaryConditionSet scale_boundary_conditions(const BoundaryConditionSet& bc,
                                               const std::map<PointId, double>& current_pressures,
                                               const std::map<PointId, double>& anchor_pressures,
                                               bool enabled = true, bool inverted = false);

/// Predictor-corrector on a fixed coefficient field. Warm-started from
/// `initial_flows`; outlet scaling references `anchor_outlet_pressures`.
HemodynamicSolution solve_with_coefficients(const CenterlineTree& tree,
                                            std::span<const EdgeCoefficients> coeffs,
                                            std::span<const double> gamma,
                                            const BoundaryConditionSet& bc,
                                            std::span<const double> initial_flows,
                                            const std::map<PointId, double>& anchor_outlet_pressures,
                                            const SolverConfig& config);

/// Patient anchor whose flows seed a solve under `bc`: the superemic anchor
/// for the surface's superemic outlet set, the hyperemic one otherwise.
AnchorConfig seed_anchor(const ResponseSurface& surface, const BoundaryConditionSet& bc);

/// Reduced-order prediction for a geometry between patient and ideal.
HemodynamicSolution solve(const ResponseSurface& surface, const CenterlineTree& modified,
                          const std::set<PointId>& modified_edges, const SolverConfig& config = {});

/// Same, under explicit boundary conditions (e.g. the superemic state).
HemodynamicSolution solve(const ResponseSurface& surface, const CenterlineTree& modified,
                          const std::set<PointId>& modified_edges, const SolverConfig& config,
                          const BoundaryConditionSet& bc);

struct TracePoint {
  double arc_length = 0.0;  // cm from the ostium
  double ffr = 1.0;
};

std::vector<TracePoint> ffr_trace(const CenterlineTree& tree, const HemodynamicSolution& solution,
                                  std::span<const PointId> path);

}  // namespace psrom
