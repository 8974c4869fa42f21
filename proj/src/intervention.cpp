#include "psrom/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "psrom/errors.hpp"

namespace psrom {

const char* lesion_kind_name(LesionKind kind) {
  switch (kind) {
    case LesionKind::Focal: return "focal";
    case LesionKind::Ostial: return "ostial";
    case LesionKind::Bifurcation: return "bifurcation";
    case LesionKind::SerialMember: return "serial";
  }
  return "focal";
}

LesionKind parse_lesion_kind(const std::string& name) {
  if (name == "focal") return LesionKind::Focal;
  if (name == "ostial") return LesionKind::Ostial;
  if (name == "bifurcation") return LesionKind::Bifurcation;
  if (name == "serial") return LesionKind::SerialMember;
  throw Error("unknown lesion kind '" + name + "'");
}

std::vector<double> narrowing(const CenterlineTree& patient, const std::vector<double>& ideal_radii) {
  if (ideal_radii.size() != patient.size()) throw Error("ideal profile does not match tree");
  std::vector<double> nu(patient.size());
  for (PointId i = 0; i < patient.size(); ++i) nu[i] = 1.0 - patient.radius(i) / ideal_radii[i];
  return nu;
}

std::vector<Lesion> detect_lesions(const CenterlineTree& patient, const IdealProfile& ideal,
                                   const LesionOptions& options) {
  const auto nu = narrowing(patient, ideal.radius_ideal);
  const std::size_t n = patient.size();
  std::vector<char> in(n, 0);
  for (PointId i = 0; i < n; ++i) in[i] = nu[i] >= options.threshold - 1e-12;

  const auto paths = root_to_leaf_paths(patient);
  std::vector<char> bridged = in;
  for (const auto& path : paths) {
    std::size_t last_end = std::numeric_limits<std::size_t>::max();
    for (std::size_t pos = 0; pos < path.size(); ++pos) {
      if (!in[path[pos]]) continue;
      if (last_end != std::numeric_limits<std::size_t>::max() && pos > last_end + 1 &&
          patient.arc_length(path[pos]) - patient.arc_length(path[last_end]) < options.merge_gap) {
        for (std::size_t q = last_end + 1; q < pos; ++q) bridged[path[q]] = 1;
      }
      last_end = pos;
    }
  }

  // Components of the lesion mask; ids are topological so a component's
  // label is fixed by its most proximal point.
  std::vector<std::size_t> comp(n, std::numeric_limits<std::size_t>::max());
  std::vector<Lesion> lesions;
  for (PointId i = 0; i < n; ++i) {
    if (!bridged[i]) continue;
    if (i != 0 && bridged[patient.parent(i)]) {
      comp[i] = comp[patient.parent(i)];
    } else {
      comp[i] = lesions.size();
      lesions.emplace_back();
    }
    auto& l = lesions[comp[i]];
    l.member_point_ids.push_back(i);
    l.max_narrowing = std::max(l.max_narrowing, nu[i]);
  }

  for (auto& l : lesions) {
    PointId worst = l.member_point_ids.front();
    for (PointId id : l.member_point_ids)
      if (nu[id] > nu[worst]) worst = id;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      if (std::find(paths[p].begin(), paths[p].end(), worst) == paths[p].end()) continue;
      l.path_id = p;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (PointId id : paths[p]) {
        if (comp[id] != comp[worst]) continue;
        lo = std::min(lo, patient.arc_length(id));
        hi = std::max(hi, patient.arc_length(id));
      }
      l.arc_start = lo;
      l.arc_end = hi;
      break;
    }
  }
  return lesions;
}

std::vector<std::size_t> paths_through(const CenterlineTree& tree, const Lesion& lesion) {
  const auto paths = root_to_leaf_paths(tree);
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (PointId id : lesion.member_point_ids) {
      if (std::binary_search(paths[p].begin(), paths[p].end(), id)) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

LesionKind classify_lesion(const CenterlineTree& tree, const Lesion& lesion,
                           const std::vector<Lesion>& all_lesions, const LesionOptions& options) {
  const auto paths = root_to_leaf_paths(tree);
  for (std::size_t p : paths_through(tree, lesion)) {
    std::size_t count = 0;
    for (const auto& other : all_lesions) {
      for (PointId id : other.member_point_ids) {
        if (std::binary_search(paths[p].begin(), paths[p].end(), id)) {
          ++count;
          break;
        }
      }
    }
    if (count >= 3) return LesionKind::SerialMember;
  }
  for (PointId id : lesion.member_point_ids)
    if (tree.is_branch(id)) return LesionKind::Bifurcation;
  if (tree.arc_length(lesion.member_point_ids.front()) <= options.ostial_zone) return LesionKind::Ostial;
  return LesionKind::Focal;
}

void classify_lesions(const CenterlineTree& tree, std::vector<Lesion>& lesions,
                      const LesionOptions& options) {
  std::vector<LesionKind> kinds;
  kinds.reserve(lesions.size());
  for (const auto& l : lesions) kinds.push_back(classify_lesion(tree, l, lesions, options));
  for (std::size_t i = 0; i < lesions.size(); ++i) lesions[i].kind = kinds[i];
}

double blend_weight(double arc, double arc_start, double arc_end, double blend_length) {
  if (arc < arc_start || arc > arc_end) return 0.0;
  if (blend_length <= 0.0) return 1.0;
  double t = std::min({1.0, (arc - arc_start) / blend_length, (arc_end - arc) / blend_length});
  t = std::max(0.0, t);
  return t * t * (3.0 - 2.0 * t);
}

ModifiedGeometry apply_modification(const CenterlineTree& patient, const std::vector<double>& ideal_radii,
                                    const ModificationPlan& plan) {
  if (ideal_radii.size() != patient.size()) throw Error("ideal profile does not match tree");
  if (plan.blend_length < 0.0) throw Error("blend length must be non-negative");
  const auto paths = root_to_leaf_paths(patient);
  const std::size_t n = patient.size();

  std::vector<double> fraction(n, 0.0);
  std::vector<double> owner_target(n, -1.0);
  for (const auto& iv : plan.intervals) {
    if (iv.path_id >= paths.size()) throw Error("plan interval references unknown path " + std::to_string(iv.path_id));
    if (!(iv.arc_end >= iv.arc_start)) throw Error("plan interval has arc_end < arc_start");
    if (!(iv.target_fraction >= 0.0 && iv.target_fraction <= 1.0)) {
      std::ostringstream msg;
      msg << "target fraction " << iv.target_fraction << " on path " << iv.path_id << " ["
          << iv.arc_start << ", " << iv.arc_end << "] outside the [patient, ideal] envelope";
      throw EnvelopeError(msg.str());
    }
    for (PointId id : paths[iv.path_id]) {
      const double s = patient.arc_length(id);
      if (s < iv.arc_start || s > iv.arc_end) continue;
      if (owner_target[id] >= 0.0 && std::abs(owner_target[id] - iv.target_fraction) > 1e-12)
        throw Error("overlapping plan intervals with conflicting target fractions at point " +
                    std::to_string(id));
      owner_target[id] = iv.target_fraction;
      fraction[id] = std::max(fraction[id],
                              iv.target_fraction * blend_weight(s, iv.arc_start, iv.arc_end, plan.blend_length));
    }
  }

  std::vector<double> r = patient.radii();
  for (PointId i = 0; i < n; ++i) {
    if (fraction[i] <= 0.0) continue;
    r[i] = (1.0 - fraction[i]) * r[i] + fraction[i] * ideal_radii[i];
  }
  ModifiedGeometry out{patient.with_radii(r), {}};
  for (PointId k = 1; k < n; ++k) {
    const PointId p = patient.parent(k);
    if (r[k] != patient.radius(k) || r[p] != patient.radius(p)) out.modified_edges.insert(k);
  }
  return out;
}

ModificationPlan full_idealization_plan(const CenterlineTree& tree, const Lesion& lesion,
                                        double target_fraction, double blend_length) {
  const auto paths = root_to_leaf_paths(tree);
  ModificationPlan plan;
  plan.blend_length = blend_length;
  for (std::size_t p : paths_through(tree, lesion)) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (PointId id : paths[p]) {
      if (!std::binary_search(lesion.member_point_ids.begin(), lesion.member_point_ids.end(), id)) continue;
      lo = std::min(lo, tree.arc_length(id));
      hi = std::max(hi, tree.arc_length(id));
    }
    const double path_end = tree.arc_length(paths[p].back());
    plan.intervals.push_back({p, std::max(0.0, lo - blend_length), std::min(path_end, hi + blend_length),
                              target_fraction});
  }
  return plan;
}

std::vector<PointId> select_evaluation_points(const CenterlineTree& tree,
                                              const std::set<PointId>& modified_edges,
                                              const EvaluationOptions& options) {
  std::set<PointId> chosen;
  if (modified_edges.empty()) return {};
  for (const auto& path : root_to_leaf_paths(tree)) {
    std::size_t last = 0;
    bool found = false;
    for (std::size_t pos = 1; pos < path.size(); ++pos)
      if (modified_edges.count(path[pos])) {
        last = pos;
        found = true;
      }
    if (!found) continue;

    std::vector<double> branch_arcs;
    for (PointId id : path)
      if (tree.is_branch(id)) branch_arcs.push_back(tree.arc_length(id));

    const double limit = tree.arc_length(path[last]) + options.recovery_zone;
    for (std::size_t pos = last + 1; pos + 1 < path.size(); ++pos) {
      const double s = tree.arc_length(path[pos]);
      if (s <= limit) continue;
      const bool clear = std::all_of(branch_arcs.begin(), branch_arcs.end(), [&](double b) {
        return std::abs(s - b) >= options.branch_clearance;
      });
      if (clear) {
        chosen.insert(path[pos]);
        break;
      }
    }
  }
  return {chosen.begin(), chosen.end()};
}

std::string lesions_to_csv(const std::vector<Lesion>& lesions) {
  std::ostringstream out;
  out.precision(12);
  out << "path,arc_start,arc_end,max_narrowing,kind,points\n";
  for (const auto& l : lesions)
    out << l.path_id << ',' << l.arc_start << ',' << l.arc_end << ',' << l.max_narrowing << ','
        << lesion_kind_name(l.kind) << ',' << l.member_point_ids.size() << '\n';
  return out.str();
}

}  // namespace psrom
