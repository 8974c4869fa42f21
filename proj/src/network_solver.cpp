#include "psrom/network_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "psrom/errors.hpp"

namespace psrom {

void BoundaryConditionSet::validate(const CenterlineTree& tree) const {
  if (!(aortic_pressure > 0.0)) throw Error("aortic pressure must be positive");
  if (!(viscosity > 0.0)) throw Error("viscosity must be positive");
  if (!(density > 0.0)) throw Error("density must be positive");
  if (outlet_resistances.size() != tree.outlets().size())
    throw Error("outlet resistance count does not match tree outlets");
  for (PointId id : tree.outlets()) {
    auto it = outlet_resistances.find(id);
    if (it == outlet_resistances.end())
      throw Error("missing outlet resistance for outlet " + std::to_string(id));
    if (!(it->second > 0.0)) throw Error("outlet resistance must be positive at " + std::to_string(id));
  }
}

BoundaryConditionSet BoundaryConditionSet::with_scaled_outlets(double factor) const {
  BoundaryConditionSet out = *this;
  for (auto& [id, r] : out.outlet_resistances) r *= factor;
  return out;
}

BoundaryConditionSet default_boundary_conditions(const CenterlineTree& tree, double aortic_pressure,
                                                 double wall_shear_stress) {
  BoundaryConditionSet bc;
  bc.aortic_pressure = aortic_pressure;
  for (PointId id : tree.outlets()) {
    const double r = tree.radius(id);
    const double q = std::numbers::pi * r * r * r * wall_shear_stress / (4.0 * bc.viscosity);
    bc.outlet_resistances[id] = aortic_pressure / q;
  }
  return bc;
}

double poiseuille_coefficient(const SegmentGeometry& g, double viscosity) {
  const double r = g.mean_radius();
  return 8.0 * viscosity * g.length / (std::numbers::pi * r * r * r * r);
}

double bernoulli_coefficient(const SegmentGeometry& g, double density) {
  const double inv_p = 1.0 / (g.area_proximal * g.area_proximal);
  const double inv_d = 1.0 / (g.area_distal * g.area_distal);
  return 0.5 * density * (inv_d - inv_p);
}

SegmentLossCoefficients segment_loss_coefficients(const SegmentGeometry& g, double viscosity,
                                                  double density, double recovery_efficiency) {
  SegmentLossCoefficients c;
  c.viscous = poiseuille_coefficient(g, viscosity);
  const double bernoulli = bernoulli_coefficient(g, density);
  if (bernoulli > 0.0)
    c.convective = bernoulli;
  else
    c.recovery = -recovery_efficiency * bernoulli;
  return c;
}

double segment_loss(const SegmentGeometry& g, double flow, double viscosity, double density,
                    double recovery_efficiency) {
  return segment_loss_coefficients(g, viscosity, density, recovery_efficiency).pressure_drop(flow);
}

namespace {

// Exact solve of the linear resistance network on a tree: bottom-up series /
// parallel reduction, then top-down current division. Returns false if an
// effective resistance is not positive.
bool linear_tree_flows(const CenterlineTree& tree, const std::vector<double>& edge_r,
                       const std::vector<double>& outlet_r, double aortic_pressure,
                       std::vector<double>& r_eff, std::vector<double>& flows) {
  const std::size_t n = tree.size();
  r_eff.assign(n, 0.0);
  for (PointId i = n; i-- > 0;) {
    if (tree.is_outlet(i)) {
      r_eff[i] = outlet_r[i];
      continue;
    }
    auto kids = tree.children(i);
    if (kids.size() == 1) {
      r_eff[i] = edge_r[kids[0]] + r_eff[kids[0]];
    } else {
      double g = 0.0;
      for (PointId c : kids) g += 1.0 / (edge_r[c] + r_eff[c]);
      r_eff[i] = 1.0 / g;
    }
    if (!(r_eff[i] > 0.0) || !std::isfinite(r_eff[i])) return false;
  }
  flows.assign(n, 0.0);
  flows[0] = aortic_pressure / r_eff[0];
  for (PointId i = 0; i < n; ++i) {
    auto kids = tree.children(i);
    if (kids.size() == 1) {
      flows[kids[0]] = flows[i];
    } else {
      for (PointId c : kids) flows[c] = flows[i] * r_eff[i] / (edge_r[c] + r_eff[c]);
    }
  }
  return true;
}

void integrate_pressures(const CenterlineTree& tree, const std::vector<SegmentLossCoefficients>& loss,
                         const std::vector<double>& flows, double aortic_pressure,
                         std::vector<double>& pressures) {
  pressures.assign(tree.size(), aortic_pressure);
  for (PointId k = 1; k < tree.size(); ++k)
    pressures[k] = pressures[tree.parent(k)] - loss[k].pressure_drop(flows[k]);
}

}  // namespace

HemodynamicSolution solve_steady(const CenterlineTree& tree, const BoundaryConditionSet& bc,
                                 const OracleOptions& options) {
  bc.validate(tree);
  const std::size_t n = tree.size();

  std::vector<SegmentLossCoefficients> loss(n);
  for (PointId k = 1; k < n; ++k)
    loss[k] = segment_loss_coefficients(tree.segment(k), bc.viscosity, bc.density,
                                        options.recovery_efficiency);

  std::vector<double> outlet_r(n, 0.0), base_outlet_r(n, 0.0);
  for (const auto& [id, r] : bc.outlet_resistances) outlet_r[id] = base_outlet_r[id] = r;
  const bool adaptive = !options.adaptive_outlet_reference_pressures.empty();

  HemodynamicSolution sol;
  sol.aortic_pressure = bc.aortic_pressure;

  std::vector<double> edge_r(n, 0.0), r_eff, flows, next;
  for (PointId k = 1; k < n; ++k) edge_r[k] = loss[k].viscous;
  if (!linear_tree_flows(tree, edge_r, outlet_r, bc.aortic_pressure, r_eff, flows)) {
    sol.flows.assign(n, 0.0);
    sol.pressures.assign(n, bc.aortic_pressure);
    sol.ffr.assign(n, 1.0);
    return sol;
  }

  const double w = options.damping;
  for (int it = 1; it <= options.max_iterations; ++it) {
    sol.iterations = it;
    for (PointId k = 1; k < n; ++k) edge_r[k] = loss[k].resistance(flows[k]);
    if (adaptive) {
      integrate_pressures(tree, loss, flows, bc.aortic_pressure, sol.pressures);
      for (const auto& [id, p_ref] : options.adaptive_outlet_reference_pressures) {
        const double p = std::max(sol.pressures[id], 1e-6 * bc.aortic_pressure);
        outlet_r[id] = base_outlet_r[id] * p_ref / p;
      }
    }
    if (!linear_tree_flows(tree, edge_r, outlet_r, bc.aortic_pressure, r_eff, next)) break;

    double change = 0.0;
    for (PointId k = 0; k < n; ++k) {
      const double updated = (1.0 - w) * flows[k] + w * next[k];
      change = std::max(change, std::abs(updated - flows[k]) / std::max(std::abs(updated), 1e-300));
      flows[k] = updated;
    }
    if (change <= options.flow_tolerance) {
      sol.converged = true;
      break;
    }
  }

  sol.flows = std::move(flows);
  sol.ostial_flow = sol.flows[0];
  integrate_pressures(tree, loss, sol.flows, bc.aortic_pressure, sol.pressures);
  sol.ffr.resize(n);
  for (PointId i = 0; i < n; ++i) sol.ffr[i] = sol.pressures[i] / bc.aortic_pressure;
  return sol;
}

const char* anchor_label(AnchorConfig config) {
  switch (config) {
    case AnchorConfig::PatientHyperemia: return "patient-hyperemia";
    case AnchorConfig::PatientSuperemia: return "patient-superemia";
    case AnchorConfig::IdealHyperemia: return "ideal-hyperemia";
    case AnchorConfig::IdealSuperemia: return "ideal-superemia";
  }
  return "unknown";
}

AnchorSet run_anchors(const CenterlineTree& patient, const CenterlineTree& ideal,
                      const BoundaryConditionSet& bc_hyperemia, const OracleOptions& options) {
  if (!patient.same_topology(ideal))
    throw Error("patient and ideal trees must share ids, edges and arc lengths");
  const auto bc_superemia = bc_hyperemia.with_scaled_outlets(kSuperemiaResistanceFactor);

  AnchorSet anchors;
  for (AnchorConfig config : kAnchorConfigs) {
    const bool is_patient =
        config == AnchorConfig::PatientHyperemia || config == AnchorConfig::PatientSuperemia;
    const bool is_hyper =
        config == AnchorConfig::PatientHyperemia || config == AnchorConfig::IdealHyperemia;
    auto sol = solve_steady(is_patient ? patient : ideal, is_hyper ? bc_hyperemia : bc_superemia,
                            options);
    if (!sol.converged)
      throw ConvergenceError(anchor_label(config), std::string("anchor solve did not converge: ") +
                                                       anchor_label(config));
    anchors[config] = std::move(sol);
  }
  return anchors;
}

std::string solution_to_csv(const HemodynamicSolution& solution) {
  std::ostringstream out;
  out.precision(17);
  out << "record,id,pressure,ffr,flow\n";
  for (std::size_t i = 0; i < solution.pressures.size(); ++i)
    out << "point," << i << ',' << solution.pressures[i] << ',' << solution.ffr[i] << ",\n";
  for (std::size_t k = 1; k < solution.flows.size(); ++k)
    out << "edge," << k << ",,," << solution.flows[k] << '\n';
  return out.str();
}

}  // namespace psrom
