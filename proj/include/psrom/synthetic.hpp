#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/intervention.hpp"
#include "psrom/network_solver.hpp"

namespace psrom {

struct SyntheticConfig {
  int min_depth = 2;  // bifurcation levels
  int max_depth = 4;
  int min_lesions = 1;
  int max_lesions = 4;
  double min_narrowing = 0.3;
  double max_narrowing = 0.8;
  double min_lesion_length = 0.5;  // cm
  double max_lesion_length = 2.0;
  double point_spacing = 0.05;      // cm
  double min_radius = 0.05;
  double max_radius = 0.25;
  double min_vessel_length = 1.5;    // non-terminal vessels
  double max_vessel_length = 3.0;
  double min_terminal_length = 3.0;  // long enough to evaluate past recovery
  double max_terminal_length = 6.0;
  double aortic_pressure = kDefaultAorticPressure;
};

/// Generated lesion as placed: intended kind, centre point and shape.
struct LesionLabel {
  LesionKind kind = LesionKind::Focal;
  PointId center = 0;
  double narrowing = 0.0;
  double length = 0.0;  // cm
};

struct SyntheticPatient {
  std::uint64_t seed = 0;
  CenterlineTree tree;
  std::vector<LesionLabel> labels;
  BoundaryConditionSet bc;
};

/// Deterministic for a given seed and config. Radii taper monotonically
/// along every path before lesions are cut in; each lesion is a raised
/// cosine narrowing. The scenario (focal, ostial, bifurcation, serial) is
/// drawn first and fixes how many lesions are placed and where.
SyntheticPatient generate_synthetic_patient(std::uint64_t seed, const SyntheticConfig& config = {});

/// Same generator with the point spacing rescaled so the tree has close to
/// `target_points` points (used for latency runs).
SyntheticPatient generate_sized_patient(std::uint64_t seed, std::size_t target_points,
                                        SyntheticConfig config = {});

}  // namespace psrom
