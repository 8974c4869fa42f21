#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/network_solver.hpp"
#include "psrom/resistance_network.hpp"

namespace psrom {

// tol1: below this relative hyperemic-to-superemic flow separation the
// anchor pair is too close to resolve b, and analytic coefficients are used.
inline constexpr double kFlowSeparationThreshold = 0.1;
inline constexpr double kRecoveryZoneLength = 2.0;  // cm

/// Fits R = a + b Q through the hyperemic and superemic states of edge
/// `edge` (distal point id), or falls back to Poiseuille + Bernoulli when
/// the superemic flow exceeds the hyperemic flow by no more than tol1.
EdgeCoefficients fit_edge_coefficients(const HemodynamicSolution& hyperemia,
                                       const HemodynamicSolution& superemia,
                                       const CenterlineTree& tree, PointId edge, double viscosity,
                                       double density);

/// Analytic coefficients: a = 8 mu L / (pi rbar^4), b = rho/2 max(0, 1/A_d^2 - 1/A_p^2).
EdgeCoefficients poiseuille_fallback(const SegmentGeometry& g, double viscosity, double density);

/// Poiseuille-consistent interpolant: alpha(r_orig) = 1, alpha(r_ideal) = 0,
/// a(r) = alpha a(r_orig) + (1 - alpha) a(r_ideal). Returns 1 when the two
/// radii coincide to a relative 1e-6.
double alpha(double r, double r_orig, double r_ideal);

/// Area and area gradient entering beta. The area is the discrete 1/A^3 that
/// makes rho/2 (1/A_d^2 - 1/A_p^2) = -rho L (1/A^3) dA/dz hold exactly.
double inertial_area(const SegmentGeometry& g);
double inertial_shape(double area, double area_gradient);  // (1/A^3) dA/dz

/// Bernoulli-consistent interpolant (g - g_ideal) / (g_orig - g_ideal) with
/// g = (1/A^3) dA/dz; nullopt when |g_orig - g_ideal| < 1e-10.
std::optional<double> beta(double area, double area_gradient, const SegmentGeometry& orig,
                           const SegmentGeometry& ideal);

/// The displayed form beta0 g + beta1 with beta0 = 1/(g_o - g_i) and
/// beta1 = 1/(1 - (A_i/A_o)^3 (dA_o/dz)/(dA_i/dz)); nullopt where undefined.
std::optional<double> beta_displayed_form(double area, double area_gradient,
                                          const SegmentGeometry& orig, const SegmentGeometry& ideal);

enum class RecoveryGradientConvention {
  ProximalToDistal,  // area shrinking distally counts as a negative gradient
  DistalToProximal,  // area growing distally counts as a negative gradient
};

struct RecoveryOptions {
  double zone_length = kRecoveryZoneLength;
  RecoveryGradientConvention convention = RecoveryGradientConvention::DistalToProximal;
  bool enabled = true;
  // The zone does not enter an unmodified edge touching a point narrowed by
  // at least this fraction of the ideal radius: a downstream lesion keeps its
  // own anchor-fitted recovery. Zero or less disables the barrier.
  double narrowing_barrier = 0.30;
};

struct ResponseSurface {
  CenterlineTree patient;
  CenterlineTree ideal;
  BoundaryConditionSet bc_hyperemia;
  double recovery_efficiency = kDefaultRecoveryEfficiency;  // of the oracle used for anchors
  AnchorSet anchors;
  std::vector<EdgeCoefficients> patient_coeffs;  // per edge, slot 0 unused
  std::vector<EdgeCoefficients> ideal_coeffs;
  std::vector<double> gamma;  // per daughter point; 1 elsewhere
  std::uint64_t geometry_digest = 0;
};

/// gamma_d = Q_d / (Q_m R_eff,m / R_through,d) at the patient-hyperemia
/// anchor, with effective resistances from `patient_coeffs` at anchor flows.
std::vector<double> extract_gamma(const HemodynamicSolution& anchor_hyperemia,
                                  const CenterlineTree& patient,
                                  const std::vector<EdgeCoefficients>& patient_coeffs,
                                  const BoundaryConditionSet& bc_hyperemia);

/// Runs the four anchors and assembles the surface.
ResponseSurface build_response_surface(const CenterlineTree& patient, const CenterlineTree& ideal,
                                       const BoundaryConditionSet& bc_hyperemia,
                                       const OracleOptions& oracle = {});

/// Surface from precomputed anchors (no solves).
ResponseSurface assemble_response_surface(const CenterlineTree& patient, const CenterlineTree& ideal,
                                          const BoundaryConditionSet& bc_hyperemia, AnchorSet anchors,
                                          double recovery_efficiency = kDefaultRecoveryEfficiency);

/// Edges (distal ids) whose radius changed at either endpoint.
std::set<PointId> changed_edges(const CenterlineTree& reference, const CenterlineTree& modified);

/// Unmodified edges whose proximal point lies within `zone_length` of arc
/// length distal to the end of a modified edge, through bifurcations. Edges
/// flagged in `barrier` are excluded and stop the zone from passing them.
std::set<PointId> recovery_zone_edges(const CenterlineTree& tree,
                                      const std::set<PointId>& modified_edges, double zone_length,
                                      const std::vector<bool>& barrier = {});

/// Per-edge coefficients for a geometry between patient and ideal.
/// Throws EnvelopeError if a radius leaves [r_orig, r_ideal] by more than 1e-9.
std::vector<EdgeCoefficients> coefficients_for_geometry(const ResponseSurface& surface,
                                                        const CenterlineTree& modified,
                                                        const std::set<PointId>& modified_edges,
                                                        const RecoveryOptions& recovery = {});

void check_envelope(const ResponseSurface& surface, const CenterlineTree& modified);

std::string save_surface(const ResponseSurface& surface);
ResponseSurface load_surface(const std::string& document);

}  // namespace psrom
