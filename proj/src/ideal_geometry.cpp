#include "psrom/ideal_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "psrom/errors.hpp"

namespace psrom {
namespace {

std::vector<double> bounds_of(const IdealFitProblem& problem) {
  const auto& tree = problem.tree;
  if (!problem.lower_bounds) return tree.radii();
  const auto& m = *problem.lower_bounds;
  if (m.size() != tree.size()) throw Error("lower bound count does not match tree size");
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!(m[i] > 0.0) || !std::isfinite(m[i]))
      throw Error("lower bound at point " + std::to_string(i) + " must be positive");
  return m;
}

// Equal-cost tolerance used when breaking ties toward the larger radius.
bool no_worse(double candidate, double best) {
  return candidate <= best + 1e-12 * (1.0 + std::abs(best));
}

}  // namespace

double ideal_objective(const CenterlineTree& tree, const std::vector<double>& profile) {
  double total = 0.0;
  for (PointId i = 0; i < tree.size(); ++i) total += std::sqrt(std::abs(profile[i] - tree.radius(i)));
  return total;
}

std::vector<double> candidate_radius_grid(const IdealFitProblem& problem) {
  const auto m = bounds_of(problem);
  std::vector<double> grid = problem.tree.radii();
  grid.insert(grid.end(), m.begin(), m.end());
  std::sort(grid.begin(), grid.end());

  if (problem.radius_grid_resolution) {
    const double step = *problem.radius_grid_resolution;
    if (!(step > 0.0)) throw Error("radius grid resolution must be positive");
    const double lo = grid.front();
    const double hi = grid.back();
    const double count = std::floor((hi - lo) / step);
    if (count > 1e6) throw Error("radius grid resolution too fine for the radius range");
    for (std::size_t k = 1; k <= static_cast<std::size_t>(count); ++k) {
      const double v = lo + static_cast<double>(k) * step;
      if (v < hi) grid.push_back(v);
    }
    std::sort(grid.begin(), grid.end());
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

IdealProfile fit_ideal(const IdealFitProblem& problem) {
  const auto& tree = problem.tree;
  const std::size_t n = tree.size();
  const auto m = bounds_of(problem);
  const auto grid = candidate_radius_grid(problem);

  // Window [lo, hi] of grid indices per point.
  std::vector<double> floor_v(n), ceil_v(n);
  for (PointId i = n; i-- > 0;) {
    floor_v[i] = m[i];
    ceil_v[i] = std::max(tree.radius(i), m[i]);
    for (PointId c : tree.children(i)) {
      floor_v[i] = std::max(floor_v[i], floor_v[c]);
      ceil_v[i] = std::max(ceil_v[i], ceil_v[c]);
    }
  }
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());
  };
  std::vector<std::size_t> lo(n), hi(n);
  for (PointId i = 0; i < n; ++i) {
    lo[i] = index_of(floor_v[i]);
    hi[i] = index_of(ceil_v[i]);
    if (lo[i] > hi[i] || hi[i] >= grid.size())
      throw Error("infeasible lower bounds at point " + std::to_string(i));
  }

  // prefix_cost[i][j]: least subtree cost with r*_i <= grid[lo_i + j].
  std::vector<std::vector<double>> prefix_cost(n);
  std::vector<std::vector<std::uint32_t>> prefix_arg(n);
  std::vector<double> own;
  for (PointId i = n; i-- > 0;) {
    const std::size_t width = hi[i] - lo[i] + 1;
    own.assign(width, 0.0);
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t v = lo[i] + j;
      double cost = std::sqrt(std::abs(grid[v] - tree.radius(i)));
      for (PointId c : tree.children(i)) cost += prefix_cost[c][std::min(v, hi[c]) - lo[c]];
      own[j] = cost;
    }
    for (PointId c : tree.children(i)) std::vector<double>().swap(prefix_cost[c]);

    auto& pc = prefix_cost[i];
    auto& pa = prefix_arg[i];
    pc.resize(width);
    pa.resize(width);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (no_worse(own[j], best)) {
        best = own[j];
        arg = static_cast<std::uint32_t>(j);
      }
      pc[j] = best;
      pa[j] = arg;
    }
  }

  std::vector<std::size_t> chosen(n);
  chosen[0] = lo[0] + prefix_arg[0].back();
  for (PointId i = 1; i < n; ++i) {
    const std::size_t cap = std::min(chosen[tree.parent(i)], hi[i]);
    chosen[i] = lo[i] + prefix_arg[i][cap - lo[i]];
  }

  IdealProfile out;
  out.radius_ideal.resize(n);
  for (PointId i = 0; i < n; ++i) out.radius_ideal[i] = grid[chosen[i]];
  out.objective_value = ideal_objective(tree, out.radius_ideal);
  return out;
}

IdealProfile brute_force_ideal(const IdealFitProblem& problem) {
  const auto& tree = problem.tree;
  const std::size_t n = tree.size();
  if (n > 10) throw Error("brute force limited to 10 points");
  const auto m = bounds_of(problem);
  const auto grid = candidate_radius_grid(problem);

  std::vector<std::vector<double>> options(n);
  for (PointId i = 0; i < n; ++i) {
    for (double v : grid)
      if (v >= m[i]) options[i].push_back(v);
    if (options[i].size() > 12) throw Error("brute force limited to 12 candidate values per point");
  }

  std::vector<double> current(n), best_profile;
  double best = std::numeric_limits<double>::infinity();

  // Points are assigned in id order, so every parent is fixed before its children.
  auto search = [&](auto&& self, PointId i, double partial) -> void {
    if (partial > best) return;
    if (i == n) {
      best = partial;
      best_profile = current;
      return;
    }
    for (double v : options[i]) {
      if (i > 0 && v > current[tree.parent(i)]) continue;
      current[i] = v;
      self(self, i + 1, partial + std::sqrt(std::abs(v - tree.radius(i))));
    }
  };
  search(search, 0, 0.0);
  if (best_profile.empty()) throw Error("no feasible monotone profile on the candidate grid");

  IdealProfile out;
  out.radius_ideal = std::move(best_profile);
  out.objective_value = ideal_objective(tree, out.radius_ideal);
  return out;
}

CenterlineTree dilated_tree(const CenterlineTree& tree, const IdealProfile& profile, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("dilation fraction must lie in [0, 1]");
  if (profile.radius_ideal.size() != tree.size()) throw Error("profile does not match tree");
  std::vector<double> r(tree.size());
  for (PointId i = 0; i < tree.size(); ++i) {
    // Convex-combination form keeps both endpoints bit-exact.
    r[i] = (1.0 - fraction) * tree.radius(i) + fraction * profile.radius_ideal[i];
  }
  return tree.with_radii(r);
}

}  // namespace psrom
