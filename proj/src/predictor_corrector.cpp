#include "psrom/predictor_corrector.hpp"

#include <algorithm>
#include <cmath>

#include "psrom/errors.hpp"

namespace psrom {

void SolverConfig::validate() const {
  if (!(tol2 > 0.0 && tol2 < 0.5)) throw Error("tol2 must lie in (0, 0.5)");
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
}

BoundaryConditionSet scale_boundary_conditions(const BoundaryConditionSet& bc,
                                               const std::map<PointId, double>& current_pressures,
                                               const std::map<PointId, double>& anchor_pressures,
                                               bool enabled, bool inverted) {
  if (!enabled) return bc;
  BoundaryConditionSet out = bc;
  for (auto& [id, r] : out.outlet_resistances) {
    const double p = current_pressures.at(id);
    const double p_anchor = anchor_pressures.at(id);
    if (!(p > 0.0) || !(p_anchor > 0.0)) throw Error("outlet pressures must be positive for scaling");
    r *= inverted ? p / p_anchor : p_anchor / p;
  }
  return out;
}

namespace {

void integrate_pressures(const CenterlineTree& tree, std::span<const EdgeCoefficients> coeffs,
                         const std::vector<double>& flows, double aortic_pressure,
                         std::vector<double>& pressures) {
  pressures.assign(tree.size(), aortic_pressure);
  for (PointId k = 1; k < tree.size(); ++k)
    pressures[k] = pressures[tree.parent(k)] - coeffs[k].resistance(flows[k]) * flows[k];
}

}  // namespace

HemodynamicSolution solve_with_coefficients(const CenterlineTree& tree,
                                            std::span<const EdgeCoefficients> coeffs,
                                            std::span<const double> gamma,
                                            const BoundaryConditionSet& bc,
                                            std::span<const double> initial_flows,
                                            const std::map<PointId, double>& anchor_outlet_pressures,
                                            const SolverConfig& config) {
  config.validate();
  const std::size_t n = tree.size();
  if (coeffs.size() != n || gamma.size() != n || initial_flows.size() != n)
    throw Error("coefficient, gamma and flow arrays must match the tree size");

  const auto base_outlet_r = outlet_resistance_vector(tree, bc);
  auto outlet_r = base_outlet_r;
  std::vector<double> flows(initial_flows.begin(), initial_flows.end());
  std::vector<double> pressures;

  HemodynamicSolution sol;
  sol.aortic_pressure = bc.aortic_pressure;
  double ostial_prev = flows[0];

  for (int it = 1; it <= config.max_iterations; ++it) {
    sol.iterations = it;
    const auto edge_r = edge_resistances(coeffs, flows);
    const auto field = rbfs_effective_resistance(tree, edge_r, outlet_r);
    const double ostial = bc.aortic_pressure / field.downstream[0];
    flows = dfs_flow_distribution(tree, field, gamma, ostial);

    if (config.bc_scaling_enabled) {
      integrate_pressures(tree, coeffs, flows, bc.aortic_pressure, pressures);
      for (PointId id : tree.outlets()) {
        const double p = std::max(pressures[id], 1e-6 * bc.aortic_pressure);
        const double p_anchor = anchor_outlet_pressures.at(id);
        outlet_r[id] = base_outlet_r[id] * (config.invert_pressure_ratio ? p / p_anchor : p_anchor / p);
      }
    }

    const bool done = std::abs(ostial - ostial_prev) <= config.tol2 * ostial_prev;
    ostial_prev = ostial;
    if (done) {
      sol.converged = true;
      break;
    }
  }

  integrate_pressures(tree, coeffs, flows, bc.aortic_pressure, sol.pressures);
  sol.flows = std::move(flows);
  sol.ostial_flow = sol.flows[0];
  sol.ffr.resize(n);
  for (PointId i = 0; i < n; ++i) sol.ffr[i] = sol.pressures[i] / bc.aortic_pressure;
  return sol;
}

AnchorConfig seed_anchor(const ResponseSurface& surface, const BoundaryConditionSet& bc) {
  const auto superemic = surface.bc_hyperemia.with_scaled_outlets(kSuperemiaResistanceFactor);
  if (bc.aortic_pressure == superemic.aortic_pressure && bc.outlet_resistances == superemic.outlet_resistances)
    return AnchorConfig::PatientSuperemia;
  return AnchorConfig::PatientHyperemia;
}

HemodynamicSolution solve(const ResponseSurface& surface, const CenterlineTree& modified,
                          const std::set<PointId>& modified_edges, const SolverConfig& config) {
  return solve(surface, modified, modified_edges, config, surface.bc_hyperemia);
}

HemodynamicSolution solve(const ResponseSurface& surface, const CenterlineTree& modified,
                          const std::set<PointId>& modified_edges, const SolverConfig& config,
                          const BoundaryConditionSet& bc) {
  const auto coeffs = coefficients_for_geometry(surface, modified, modified_edges, config.recovery);
  const auto& anchor = surface.anchors[seed_anchor(surface, bc)];
  std::map<PointId, double> anchor_outlets;
  for (PointId id : surface.patient.outlets()) anchor_outlets[id] = anchor.pressures[id];
  return solve_with_coefficients(modified, coeffs, surface.gamma, bc, anchor.flows, anchor_outlets,
                                 config);
}

std::vector<TracePoint> ffr_trace(const CenterlineTree& tree, const HemodynamicSolution& solution,
                                  std::span<const PointId> path) {
  std::vector<TracePoint> trace;
  trace.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const PointId id = path[i];
    if (i > 0 && tree.parent(id) != path[i - 1]) throw Error("trace path is not a parent chain");
    trace.push_back({tree.arc_length(id), solution.ffr.at(id)});
  }
  return trace;
}

}  // namespace psrom
