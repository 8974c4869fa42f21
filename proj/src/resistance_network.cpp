#include "psrom/resistance_network.hpp"

#include <algorithm>
#include <string>

#include "psrom/errors.hpp"

namespace psrom {

const char* coefficient_source_name(CoefficientSource source) {
  switch (source) {
    case CoefficientSource::Fitted: return "fitted";
    case CoefficientSource::PoiseuilleFallback: return "poiseuille_fallback";
    case CoefficientSource::RecoveryPoiseuille: return "recovery_poiseuille";
  }
  return "fitted";
}

CoefficientSource parse_coefficient_source(const std::string& name) {
  if (name == "fitted") return CoefficientSource::Fitted;
  if (name == "poiseuille_fallback") return CoefficientSource::PoiseuilleFallback;
  if (name == "recovery_poiseuille") return CoefficientSource::RecoveryPoiseuille;
  throw Error("unknown coefficient source '" + name + "'");
}

std::vector<double> edge_resistances(std::span<const EdgeCoefficients> coeffs,
                                     std::span<const double> flows) {
  std::vector<double> r(coeffs.size(), 0.0);
  for (std::size_t k = 1; k < coeffs.size(); ++k) r[k] = coeffs[k].resistance(flows[k]);
  return r;
}

std::vector<double> outlet_resistance_vector(const CenterlineTree& tree,
                                             const BoundaryConditionSet& bc) {
  std::vector<double> r(tree.size(), 0.0);
  for (PointId id : tree.outlets()) r[id] = bc.outlet_resistances.at(id);
  return r;
}

EffectiveResistanceField rbfs_effective_resistance(const CenterlineTree& tree,
                                                   std::span<const double> edge_r,
                                                   std::span<const double> outlet_r) {
  const std::size_t n = tree.size();
  EffectiveResistanceField field;
  field.downstream.assign(n, 0.0);
  field.through.assign(n, 0.0);
  for (PointId m = n; m-- > 0;) {
    double r_eff;
    if (tree.is_outlet(m)) {
      r_eff = outlet_r[m];
    } else if (tree.is_branch(m)) {
      double conductance = 0.0;
      for (PointId k : tree.children(m)) conductance += 1.0 / field.through[k];
      r_eff = 1.0 / conductance;
    } else {
      r_eff = field.through[tree.children(m)[0]];
    }
    if (!(r_eff > 0.0)) throw Error("non-positive effective resistance at point " + std::to_string(m));
    field.downstream[m] = r_eff;
    if (m != CenterlineTree::ostium())
      field.through[m] = std::max(edge_r[m] + r_eff, kThroughResistanceGuard * r_eff);
  }
  return field;
}

std::vector<double> dfs_flow_distribution(const CenterlineTree& tree,
                                          const EffectiveResistanceField& field,
                                          std::span<const double> gamma, double ostial_flow) {
  const std::size_t n = tree.size();
  std::vector<double> flows(n, 0.0);
  flows[0] = ostial_flow;
  for (PointId m = 0; m < n; ++m) {
    if (tree.is_outlet(m)) continue;
    auto kids = tree.children(m);
    const double q = flows[m];
    if (kids.size() == 1) {
      flows[kids[0]] = q;
      continue;
    }
    const double r_m = field.downstream[m];
    double sum = 0.0;
    for (PointId d : kids) {
      flows[d] = q * r_m / field.through[d] * gamma[d];
      sum += flows[d];
    }
    const double scale = q / sum;
    flows[kids[0]] *= scale;
    flows[kids[1]] = q - flows[kids[0]];
  }
  return flows;
}

}  // namespace psrom
