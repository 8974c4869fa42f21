#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/network_solver.hpp"

namespace psrom::testing {

// Unbranched vessel of n points; radius(s) gives the radius at arc s.
inline CenterlineTree chain(std::size_t n, double spacing, const std::function<double(double)>& radius,
                            std::string name = "chain") {
  std::vector<CenterlinePoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    CenterlinePoint p;
    p.id = i;
    if (i > 0) p.parent = i - 1;
    p.arc_length_from_parent = i > 0 ? spacing : 0.0;
    p.radius = radius(static_cast<double>(i) * spacing);
    p.is_outlet = i + 1 == n;
    pts.push_back(p);
  }
  return CenterlineTree(std::move(name), std::move(pts));
}

// Y-shaped tree: trunk of `trunk` points, then two daughters of `branch`
// points each. Daughter radii are scaled by f1 and f2.
inline CenterlineTree bifurcation(std::size_t trunk, std::size_t branch, double spacing, double r0, double f1,
                                  double f2) {
  std::vector<CenterlinePoint> pts;
  auto add = [&](std::optional<PointId> parent, double r, bool outlet) {
    CenterlinePoint p;
    p.id = pts.size();
    p.parent = parent;
    p.arc_length_from_parent = parent ? spacing : 0.0;
    p.radius = r;
    p.is_outlet = outlet;
    pts.push_back(p);
    return p.id;
  };
  PointId last = add(std::nullopt, r0, false);
  for (std::size_t i = 1; i < trunk; ++i) last = add(last, r0, false);
  const PointId split = last;
  for (double f : {f1, f2}) {
    PointId cur = split;
    for (std::size_t i = 0; i < branch; ++i) cur = add(cur, r0 * f, i + 1 == branch);
  }
  return CenterlineTree("bifurcation", std::move(pts));
}

// Random tree: point 1 hangs off the ostium, each later point picks a parent
// among non-ostium points with fewer than two children. Radii are drawn from
// `values`.
inline CenterlineTree random_tree(std::mt19937_64& rng, std::size_t n, const std::vector<double>& values,
                                  double spacing = 0.1) {
  std::vector<int> kids(n, 0);
  std::vector<CenterlinePoint> pts(n);
  std::uniform_int_distribution<std::size_t> pick_value(0, values.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].id = i;
    pts[i].radius = values[pick_value(rng)];
    if (i == 0) continue;
    PointId parent = 0;
    if (i > 1) {
      std::vector<PointId> open;
      for (PointId j = 1; j < i; ++j)
        if (kids[j] < 2) open.push_back(j);
      // Prefer extending the newest point so large trees stay path-like.
      if (std::bernoulli_distribution(0.7)(rng) && kids[i - 1] == 0)
        parent = i - 1;
      else
        parent = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    }
    pts[i].parent = parent;
    pts[i].arc_length_from_parent = spacing;
    ++kids[parent];
  }
  for (std::size_t i = 1; i < n; ++i) pts[i].is_outlet = kids[i] == 0;
  return CenterlineTree("random", std::move(pts));
}

// Raised-cosine narrowing of depth `nu` centred at `c` with total length `len`.
inline double cosine_cut(double s, double c, double len, double nu) {
  const double x = (s - c) / (0.5 * len);
  if (std::abs(x) >= 1.0) return 1.0;
  return 1.0 - nu * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

// Two-point tube whose loss law is exactly dP = 800 Q + 200 Q^2 under the
// default viscosity and density: the contraction r0 -> r1 sets the Bernoulli
// term and the length sets the Poiseuille term.
struct TubeFixture {
  CenterlineTree tree;
  BoundaryConditionSet bc;
  double a = 800.0, b = 200.0, outlet_resistance = 10000.0, aortic_pressure = 13332.0;
};

inline TubeFixture closed_form_tube() {
  const double a = 800.0, b = 200.0;
  const double r0 = 0.2;
  const double a0 = std::numbers::pi * r0 * r0;
  const double inv_a1_sq = 2.0 * b / kDefaultDensity + 1.0 / (a0 * a0);
  const double a1 = 1.0 / std::sqrt(inv_a1_sq);
  const double r1 = std::sqrt(a1 / std::numbers::pi);
  const double rbar = 0.5 * (r0 + r1);
  const double length = a * std::numbers::pi * std::pow(rbar, 4) / (8.0 * kDefaultViscosity);

  std::vector<CenterlinePoint> pts(2);
  pts[0] = {0, std::nullopt, 0.0, r0, false};
  pts[1] = {1, PointId{0}, length, r1, true};
  TubeFixture f{CenterlineTree("tube", std::move(pts)), {}};
  f.bc.aortic_pressure = f.aortic_pressure;
  f.bc.outlet_resistances = {{1, f.outlet_resistance}};
  return f;
}

// Positive root of b Q^2 + (a + R) Q - P = 0.
inline double quadratic_flow(double a, double b, double r, double p) {
  return (-(a + r) + std::sqrt((a + r) * (a + r) + 4.0 * b * p)) / (2.0 * b);
}

// Single tapering vessel with a severe lesion upstream of a moderate one.
struct SerialFixture {
  CenterlineTree tree;
  BoundaryConditionSet bc;
  double severe_center = 2.5, mild_center = 6.5;
};

inline SerialFixture serial_lesion_fixture() {
  const double spacing = 0.05, length = 10.0;
  const auto n = static_cast<std::size_t>(length / spacing) + 1;
  auto radius = [](double s) {
    const double healthy = 0.2 - 0.003 * s;
    return healthy * cosine_cut(s, 2.5, 1.0, 0.65) * cosine_cut(s, 6.5, 1.0, 0.45);
  };
  auto tree = chain(n, spacing, radius, "serial");
  auto bc = default_boundary_conditions(tree);
  return {std::move(tree), std::move(bc)};
}

}  // namespace psrom::testing
