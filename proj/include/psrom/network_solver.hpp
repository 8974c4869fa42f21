#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"

namespace psrom {

inline constexpr double kDefaultViscosity = 0.04;           // poise
inline constexpr double kDefaultDensity = 1.06;             // g/cm^3
inline constexpr double kDefaultAorticPressure = 100.0 * kMmHg;
inline constexpr double kDefaultRecoveryEfficiency = 0.7;
// Superemia lowers every outlet resistance by 40%.
inline constexpr double kSuperemiaResistanceFactor = 0.6;

struct BoundaryConditionSet {
  double aortic_pressure = kDefaultAorticPressure;   // dyn/cm^2
  std::map<PointId, double> outlet_resistances;      // dyn s/cm^5
  double viscosity = kDefaultViscosity;
  double density = kDefaultDensity;

  /// Throws Error unless every invariant holds and the outlet keys equal the
  /// tree's outlets.
  void validate(const CenterlineTree& tree) const;
  BoundaryConditionSet with_scaled_outlets(double factor) const;
};

/// Outlet resistances from a target flow per outlet, q = pi r^3 tau / (4 mu)
/// (the Poiseuille flow carrying wall shear stress tau), R = P_aorta / q.
BoundaryConditionSet default_boundary_conditions(const CenterlineTree& tree,
                                                 double aortic_pressure = kDefaultAorticPressure,
                                                 double wall_shear_stress = 40.0);

struct HemodynamicSolution {
  std::vector<double> pressures;  // per point, dyn/cm^2
  std::vector<double> flows;      // per edge (distal id); flows[0] is the ostial flow
  std::vector<double> ffr;        // pressures / aortic pressure
  double aortic_pressure = 0.0;
  double ostial_flow = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Per-segment loss law of the full-order network: dP = a Q + (b - c) Q^2,
/// viscous a = 8 mu L / (pi rbar^4), convective b from the Bernoulli
/// contraction term and c the partial recovery on expansions.
struct SegmentLossCoefficients {
  double viscous = 0.0;
  double convective = 0.0;
  double recovery = 0.0;

  double resistance(double flow) const { return viscous + (convective - recovery) * flow; }
  double pressure_drop(double flow) const { return resistance(flow) * flow; }
};

double poiseuille_coefficient(const SegmentGeometry& g, double viscosity);
double bernoulli_coefficient(const SegmentGeometry& g, double density);

SegmentLossCoefficients segment_loss_coefficients(const SegmentGeometry& g, double viscosity,
                                                  double density,
                                                  double recovery_efficiency = kDefaultRecoveryEfficiency);

double segment_loss(const SegmentGeometry& g, double flow, double viscosity, double density,
                    double recovery_efficiency = kDefaultRecoveryEfficiency);

struct OracleOptions {
  double recovery_efficiency = kDefaultRecoveryEfficiency;
  double damping = 0.5;
  int max_iterations = 200;
  // Relative change of every edge flow between sweeps. Much tighter than the
  // 0.1% ostial criterion so anchors are reproducible to round-off.
  double flow_tolerance = 1e-12;
  // Passive outlet response R_k = R_k,0 * P_ref,k / P_k, off when empty.
  std::map<PointId, double> adaptive_outlet_reference_pressures;
};

/// Steady nonlinear 1D network solve by damped fixed point on the resistance
/// network. Never throws on non-convergence; check `converged`.
HemodynamicSolution solve_steady(const CenterlineTree& tree, const BoundaryConditionSet& bc,
                                 const OracleOptions& options = {});

enum class AnchorConfig { PatientHyperemia = 0, PatientSuperemia, IdealHyperemia, IdealSuperemia };

inline constexpr std::array<AnchorConfig, 4> kAnchorConfigs = {
    AnchorConfig::PatientHyperemia, AnchorConfig::PatientSuperemia, AnchorConfig::IdealHyperemia,
    AnchorConfig::IdealSuperemia};

const char* anchor_label(AnchorConfig config);

struct AnchorSet {
  std::array<HemodynamicSolution, 4> solutions;

  const HemodynamicSolution& operator[](AnchorConfig c) const {
    return solutions[static_cast<std::size_t>(c)];
  }
  HemodynamicSolution& operator[](AnchorConfig c) { return solutions[static_cast<std::size_t>(c)]; }
};

/// The four full-order anchors. Throws ConvergenceError carrying the
/// configuration label if any solve fails to converge.
AnchorSet run_anchors(const CenterlineTree& patient, const CenterlineTree& ideal,
                      const BoundaryConditionSet& bc_hyperemia, const OracleOptions& options = {});

/// CSV export: `point,id,pressure,ffr` rows then `edge,id,flow` rows.
std::string solution_to_csv(const HemodynamicSolution& solution);

}  // namespace psrom
