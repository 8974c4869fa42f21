#pragma once

#include <optional>
#include <vector>

#include "psrom/centerline.hpp"

namespace psrom {

inline constexpr double kDefaultGridResolution = 0.0025;  // cm

struct IdealFitProblem {
  const CenterlineTree& tree;
  // Per-point minimal radius m_i; defaults to the patient radius.
  std::optional<std::vector<double>> lower_bounds;
  // Spacing of the refinement grid added to the input radii; nullopt adds none.
  std::optional<double> radius_grid_resolution = kDefaultGridResolution;
};

struct IdealProfile {
  std::vector<double> radius_ideal;
  double objective_value = 0.0;  // sum of sqrt|r* - r_orig|
};

/// Sorted, de-duplicated candidate radii shared by every point: all input
/// radii, all lower bounds and the optional refinement lattice.
std::vector<double> candidate_radius_grid(const IdealFitProblem& problem);

/// Globally optimal monotone (non-increasing from ostium to leaves) profile
/// minimizing sum_i |r*_i - r_i|^(1/2) over the candidate grid, subject to
/// r*_i >= m_i.
///
/// Bottom-up tree DP with one cost-to-go table per point. Each table only
/// spans grid values in [max of m over the subtree, max of max(r, m) over the
/// subtree]: every optimum lies in that window, since clipping a feasible
/// profile to it keeps it monotone and feasible and never increases any term.
/// Ties between equal-cost values are broken toward the larger radius.
IdealProfile fit_ideal(const IdealFitProblem& problem);

/// Exhaustive enumeration over the same candidate grid. Test oracle; limited
/// to 10 points and 12 admissible values per point.
IdealProfile brute_force_ideal(const IdealFitProblem& problem);

/// r = r_orig + fraction * (r_ideal - r_orig) pointwise.
CenterlineTree dilated_tree(const CenterlineTree& tree, const IdealProfile& profile, double fraction);

double ideal_objective(const CenterlineTree& tree, const std::vector<double>& profile);

}  // namespace psrom
