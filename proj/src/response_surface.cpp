#include "psrom/response_surface.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "psrom/errors.hpp"

namespace psrom {

EdgeCoefficients poiseuille_fallback(const SegmentGeometry& g, double viscosity, double density) {
  const double bernoulli = bernoulli_coefficient(g, density);
  return {poiseuille_coefficient(g, viscosity), bernoulli > 0.0 ? bernoulli : 0.0,
          CoefficientSource::PoiseuilleFallback};
}

EdgeCoefficients fit_edge_coefficients(const HemodynamicSolution& hyperemia,
                                       const HemodynamicSolution& superemia,
                                       const CenterlineTree& tree, PointId edge, double viscosity,
                                       double density) {
  const double q_h = hyperemia.flows.at(edge);
  const double q_s = superemia.flows.at(edge);
  if (!(q_h > 0.0) || !(q_s > 0.0))
    throw Error("non-positive anchor flow on edge " + std::to_string(edge));
  if (q_s - q_h <= kFlowSeparationThreshold * q_h)
    return poiseuille_fallback(tree.segment(edge), viscosity, density);

  const PointId i = tree.parent(edge);
  const double dp_h = hyperemia.pressures[i] - hyperemia.pressures[edge];
  const double dp_s = superemia.pressures[i] - superemia.pressures[edge];
  EdgeCoefficients c;
  c.b = (dp_s / q_s - dp_h / q_h) / (q_s - q_h);
  c.a = (dp_s * q_h / q_s - dp_h * q_s / q_h) / (q_h - q_s);
  c.source = CoefficientSource::Fitted;
  return c;
}

double alpha(double r, double r_orig, double r_ideal) {
  if (std::abs(r_ideal - r_orig) < 1e-6 * r_orig) return 1.0;
  const double r4 = r * r * r * r;
  const double o4 = r_orig * r_orig * r_orig * r_orig;
  const double i4 = r_ideal * r_ideal * r_ideal * r_ideal;
  // alpha0 / r^4 + alpha1 with alpha0 = i4 o4 / (i4 - o4), alpha1 = -o4 / (i4 - o4),
  // gathered over one denominator so both endpoint identities are exact.
  return ((i4 - r4) * o4) / ((i4 - o4) * r4);
}

double inertial_area(const SegmentGeometry& g) {
  const double ap = g.area_proximal;
  const double ad = g.area_distal;
  return std::cbrt(2.0 * ap * ap * ad * ad / (ap + ad));
}

double inertial_shape(double area, double area_gradient) {
  return area_gradient / (area * area * area);
}

namespace {

// g = A' / A^3 in extended precision; beta divides by g_orig - g_ideal, which
// cancels badly when the two shapes are close.
long double shape_ld(long double area, long double gradient) { return gradient / (area * area * area); }

}  // namespace

std::optional<double> beta(double area, double area_gradient, const SegmentGeometry& orig,
                           const SegmentGeometry& ideal) {
  const long double g = shape_ld(area, area_gradient);
  const long double g_orig = shape_ld(inertial_area(orig), orig.area_gradient);
  const long double g_ideal = shape_ld(inertial_area(ideal), ideal.area_gradient);
  if (std::abs(g_orig - g_ideal) < 1e-10L) return std::nullopt;
  return static_cast<double>((g - g_ideal) / (g_orig - g_ideal));
}

std::optional<double> beta_displayed_form(double area, double area_gradient,
                                          const SegmentGeometry& orig, const SegmentGeometry& ideal) {
  const long double a_orig = inertial_area(orig);
  const long double a_ideal = inertial_area(ideal);
  const long double g_orig = shape_ld(a_orig, orig.area_gradient);
  const long double g_ideal = shape_ld(a_ideal, ideal.area_gradient);
  if (std::abs(g_orig - g_ideal) < 1e-10L || ideal.area_gradient == 0.0) return std::nullopt;
  const long double beta0 = 1.0L / (g_orig - g_ideal);
  const long double ratio = a_ideal / a_orig;
  const long double denom = 1.0L - ratio * ratio * ratio * (static_cast<long double>(orig.area_gradient) / ideal.area_gradient);
  if (denom == 0.0L) return std::nullopt;
  const long double beta1 = 1.0L / denom;
  const long double a = area;
  return static_cast<double>(beta0 / (a * a * a) * area_gradient + beta1);
}

std::vector<double> extract_gamma(const HemodynamicSolution& anchor_hyperemia,
                                  const CenterlineTree& patient,
                                  const std::vector<EdgeCoefficients>& patient_coeffs,
                                  const BoundaryConditionSet& bc_hyperemia) {
  const auto& q = anchor_hyperemia.flows;
  const auto edge_r = edge_resistances(patient_coeffs, q);
  const auto field =
      rbfs_effective_resistance(patient, edge_r, outlet_resistance_vector(patient, bc_hyperemia));
  std::vector<double> gamma(patient.size(), 1.0);
  for (PointId m : patient.branch_points()) {
    if (!(q[m] > 0.0)) throw Error("zero anchor flow at branch point " + std::to_string(m));
    for (PointId d : patient.children(m))
      gamma[d] = q[d] / (q[m] * field.downstream[m] / field.through[d]);
  }
  return gamma;
}

ResponseSurface assemble_response_surface(const CenterlineTree& patient, const CenterlineTree& ideal,
                                          const BoundaryConditionSet& bc_hyperemia, AnchorSet anchors,
                                          double recovery_efficiency) {
  if (!patient.same_topology(ideal)) throw Error("patient and ideal trees differ in topology");
  ResponseSurface s{patient, ideal, bc_hyperemia, recovery_efficiency, std::move(anchors), {}, {}, {}, 0};
  const std::size_t n = patient.size();
  const double mu = bc_hyperemia.viscosity;
  const double rho = bc_hyperemia.density;
  s.patient_coeffs.resize(n);
  s.ideal_coeffs.resize(n);
  for (PointId k = 1; k < n; ++k) {
    s.patient_coeffs[k] = fit_edge_coefficients(s.anchors[AnchorConfig::PatientHyperemia],
                                                s.anchors[AnchorConfig::PatientSuperemia], patient, k,
                                                mu, rho);
    s.ideal_coeffs[k] = fit_edge_coefficients(s.anchors[AnchorConfig::IdealHyperemia],
                                              s.anchors[AnchorConfig::IdealSuperemia], ideal, k, mu, rho);
  }
  s.gamma = extract_gamma(s.anchors[AnchorConfig::PatientHyperemia], patient, s.patient_coeffs,
                          bc_hyperemia);
  s.geometry_digest = tree_digest(patient) * 1099511628211ULL ^ tree_digest(ideal);
  return s;
}

ResponseSurface build_response_surface(const CenterlineTree& patient, const CenterlineTree& ideal,
                                       const BoundaryConditionSet& bc_hyperemia,
                                       const OracleOptions& oracle) {
  auto anchors = run_anchors(patient, ideal, bc_hyperemia, oracle);
  return assemble_response_surface(patient, ideal, bc_hyperemia, std::move(anchors),
                                   oracle.recovery_efficiency);
}

std::set<PointId> changed_edges(const CenterlineTree& reference, const CenterlineTree& modified) {
  if (!reference.same_topology(modified)) throw Error("trees differ in topology");
  std::set<PointId> out;
  for (PointId k = 1; k < reference.size(); ++k) {
    const PointId p = reference.parent(k);
    if (reference.radius(k) != modified.radius(k) || reference.radius(p) != modified.radius(p))
      out.insert(k);
  }
  return out;
}

std::set<PointId> recovery_zone_edges(const CenterlineTree& tree,
                                      const std::set<PointId>& modified_edges, double zone_length,
                                      const std::vector<bool>& barrier) {
  std::set<PointId> zone;
  if (modified_edges.empty()) return zone;
  // Arc distance from the distal end of the nearest upstream modified edge.
  std::vector<double> since(tree.size(), std::numeric_limits<double>::infinity());
  for (PointId k = 1; k < tree.size(); ++k) {
    const PointId p = tree.parent(k);
    if (modified_edges.count(k)) {
      since[k] = 0.0;
      continue;
    }
    if (!barrier.empty() && barrier[k]) continue;
    if (since[p] <= zone_length) zone.insert(k);
    since[k] = since[p] + tree.point(k).arc_length_from_parent;
  }
  return zone;
}

void check_envelope(const ResponseSurface& surface, const CenterlineTree& modified) {
  if (!surface.patient.same_topology(modified))
    throw EnvelopeError("modified tree is not topologically identical to the patient tree");
  constexpr double tol = 1e-9;
  for (PointId i = 0; i < modified.size(); ++i) {
    const double r = modified.radius(i);
    const double lo = std::min(surface.patient.radius(i), surface.ideal.radius(i));
    const double hi = std::max(surface.patient.radius(i), surface.ideal.radius(i));
    if (r < lo - tol || r > hi + tol) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "radius %.6g cm at point %zu outside envelope [%.6g, %.6g]", r,
                    i, lo, hi);
      throw EnvelopeError(buf);
    }
  }
}

std::vector<EdgeCoefficients> coefficients_for_geometry(const ResponseSurface& surface,
                                                        const CenterlineTree& modified,
                                                        const std::set<PointId>& modified_edges,
                                                        const RecoveryOptions& recovery) {
  check_envelope(surface, modified);
  const auto& patient = surface.patient;
  const auto& ideal = surface.ideal;
  const std::size_t n = patient.size();
  const double mu = surface.bc_hyperemia.viscosity;

  std::set<PointId> zone;
  if (recovery.enabled) {
    std::vector<bool> barrier;
    if (recovery.narrowing_barrier > 0.0) {
      barrier.assign(n, false);
      auto narrowed = [&](PointId i) {
        return 1.0 - patient.radius(i) / ideal.radius(i) >= recovery.narrowing_barrier - 1e-12;
      };
      for (PointId k = 1; k < n; ++k)
        barrier[k] = !modified_edges.count(k) && (narrowed(k) || narrowed(patient.parent(k)));
    }
    zone = recovery_zone_edges(modified, modified_edges, recovery.zone_length, barrier);
  }

  std::vector<EdgeCoefficients> out(n);
  for (PointId k = 1; k < n; ++k) {
    const PointId p = patient.parent(k);
    const auto g_mod = modified.segment(k);

    if (zone.count(k)) {
      const bool negative =
          recovery.convention == RecoveryGradientConvention::ProximalToDistal
              ? g_mod.area_gradient < 0.0
              : g_mod.area_gradient > 0.0;
      if (negative) {
        out[k] = {poiseuille_coefficient(g_mod, mu), 0.0, CoefficientSource::RecoveryPoiseuille};
        continue;
      }
    }

    const auto& c_orig = surface.patient_coeffs[k];
    if (modified.radius(k) == patient.radius(k) && modified.radius(p) == patient.radius(p)) {
      out[k] = c_orig;
      continue;
    }
    const auto& c_ideal = surface.ideal_coeffs[k];
    const auto g_orig = patient.segment(k);
    const auto g_ideal = ideal.segment(k);

    const double w_a = alpha(g_mod.mean_radius(), g_orig.mean_radius(), g_ideal.mean_radius());
    const auto w_b = beta(inertial_area(g_mod), g_mod.area_gradient, g_orig, g_ideal);
    const double w = w_b.value_or(w_a);

    EdgeCoefficients c;
    c.a = w_a * c_orig.a + (1.0 - w_a) * c_ideal.a;
    c.b = w * c_orig.b + (1.0 - w) * c_ideal.b;
    c.source = (c_orig.source == CoefficientSource::Fitted && c_ideal.source == CoefficientSource::Fitted)
                   ? CoefficientSource::Fitted
                   : CoefficientSource::PoiseuilleFallback;
    out[k] = c;
  }
  return out;
}

// --- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json solution_json(const HemodynamicSolution& s) {
  return {{"pressures", s.pressures}, {"flows", s.flows},       {"aortic_pressure", s.aortic_pressure},
          {"converged", s.converged}, {"iterations", s.iterations}};
}

HemodynamicSolution solution_from_json(const json& j) {
  HemodynamicSolution s;
  s.pressures = j.at("pressures").get<std::vector<double>>();
  s.flows = j.at("flows").get<std::vector<double>>();
  s.aortic_pressure = j.at("aortic_pressure").get<double>();
  s.converged = j.at("converged").get<bool>();
  s.iterations = j.at("iterations").get<int>();
  s.ostial_flow = s.flows.empty() ? 0.0 : s.flows[0];
  s.ffr.resize(s.pressures.size());
  for (std::size_t i = 0; i < s.pressures.size(); ++i) s.ffr[i] = s.pressures[i] / s.aortic_pressure;
  return s;
}

json coeffs_json(const std::vector<EdgeCoefficients>& coeffs) {
  json arr = json::array();
  for (std::size_t k = 1; k < coeffs.size(); ++k)
    arr.push_back({{"edge", k},
                   {"a", coeffs[k].a},
                   {"b", coeffs[k].b},
                   {"source", coefficient_source_name(coeffs[k].source)}});
  return arr;
}

std::vector<EdgeCoefficients> coeffs_from_json(const json& arr, std::size_t n) {
  std::vector<EdgeCoefficients> out(n);
  for (const auto& e : arr) {
    const auto k = e.at("edge").get<std::size_t>();
    if (k == 0 || k >= n) throw Error("edge id out of range in surface document");
    out[k] = {e.at("a").get<double>(), e.at("b").get<double>(),
              parse_coefficient_source(e.at("source").get<std::string>())};
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string save_surface(const ResponseSurface& s) {
  json outlets = json::array();
  for (const auto& [id, r] : s.bc_hyperemia.outlet_resistances)
    outlets.push_back({{"id", id}, {"resistance", r}});
  json anchors = json::object();
  for (AnchorConfig c : kAnchorConfigs) anchors[anchor_label(c)] = solution_json(s.anchors[c]);
  json gamma = json::array();
  for (PointId m : s.patient.branch_points())
    for (PointId d : s.patient.children(m)) gamma.push_back({{"branch", m}, {"daughter", d}, {"gamma", s.gamma[d]}});

  json doc = {{"format_version", 1},
              {"kind", "response_surface"},
              {"geometry_digest", hex64(s.geometry_digest)},
              {"patient", json::parse(save_tree(s.patient))},
              {"ideal", json::parse(save_tree(s.ideal))},
              {"boundary_conditions",
               {{"aortic_pressure", s.bc_hyperemia.aortic_pressure},
                {"viscosity", s.bc_hyperemia.viscosity},
                {"density", s.bc_hyperemia.density},
                {"outlets", outlets}}},
              {"recovery_efficiency", s.recovery_efficiency},
              {"patient_coefficients", coeffs_json(s.patient_coeffs)},
              {"ideal_coefficients", coeffs_json(s.ideal_coeffs)},
              {"gamma", gamma},
              {"anchors", anchors}};
  return doc.dump();
}

ResponseSurface load_surface(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed surface document: ") + e.what());
  }
  try {
    if (doc.at("format_version") != 1 || doc.at("kind") != "response_surface")
      throw Error("not a response surface document");
    auto patient = load_tree_from_string(doc.at("patient").dump());
    auto ideal = load_tree_from_string(doc.at("ideal").dump());
    const std::size_t n = patient.size();

    BoundaryConditionSet bc;
    const auto& jb = doc.at("boundary_conditions");
    bc.aortic_pressure = jb.at("aortic_pressure").get<double>();
    bc.viscosity = jb.at("viscosity").get<double>();
    bc.density = jb.at("density").get<double>();
    for (const auto& o : jb.at("outlets"))
      bc.outlet_resistances[o.at("id").get<PointId>()] = o.at("resistance").get<double>();
    bc.validate(patient);

    AnchorSet anchors;
    for (AnchorConfig c : kAnchorConfigs) {
      anchors[c] = solution_from_json(doc.at("anchors").at(anchor_label(c)));
      if (anchors[c].pressures.size() != n || anchors[c].flows.size() != n)
        throw Error(std::string("anchor size mismatch: ") + anchor_label(c));
    }

    ResponseSurface s{std::move(patient), std::move(ideal), std::move(bc),
                      doc.at("recovery_efficiency").get<double>(), std::move(anchors), {}, {}, {}, 0};
    s.patient_coeffs = coeffs_from_json(doc.at("patient_coefficients"), n);
    s.ideal_coeffs = coeffs_from_json(doc.at("ideal_coefficients"), n);
    s.gamma.assign(n, 1.0);
    for (const auto& g : doc.at("gamma")) s.gamma.at(g.at("daughter").get<PointId>()) = g.at("gamma").get<double>();
    s.geometry_digest = tree_digest(s.patient) * 1099511628211ULL ^ tree_digest(s.ideal);
    if (hex64(s.geometry_digest) != doc.at("geometry_digest").get<std::string>())
      throw Error("surface digest does not match its patient/ideal trees");
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed surface document: ") + e.what());
  }
}

}  // namespace psrom
