#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "psrom/errors.hpp"
#include "psrom/ideal_geometry.hpp"

using namespace psrom;
using psrom::testing::chain;
using psrom::testing::random_tree;

namespace {

CenterlineTree path_of(const std::vector<double>& r) {
  return chain(r.size(), 0.1, [&](double s) { return r[static_cast<std::size_t>(std::lround(s / 0.1))]; });
}

bool monotone(const CenterlineTree& tree, const std::vector<double>& profile, double tol = 1e-9) {
  for (PointId i = 1; i < tree.size(); ++i)
    if (profile[i] > profile[tree.parent(i)] + tol) return false;
  return true;
}

// Direct cost, written out independently of the library objective.
double cost(const CenterlineTree& tree, const std::vector<double>& profile) {
  double c = 0.0;
  for (PointId i = 0; i < tree.size(); ++i) c += std::sqrt(std::abs(profile[i] - tree.radius(i)));
  return c;
}

}  // namespace

TEST_CASE("path example") {
  const auto tree = path_of({0.30, 0.20, 0.25, 0.20});
  const auto fit = fit_ideal({tree, std::nullopt, std::nullopt});
  CHECK(fit.radius_ideal == std::vector<double>{0.30, 0.25, 0.25, 0.20});
  CHECK(fit.objective_value == doctest::Approx(std::sqrt(0.05)).epsilon(1e-12));
}

TEST_CASE("a non-increasing profile is its own optimum") {
  const auto tree = path_of({0.30, 0.25, 0.20});
  const auto fit = fit_ideal({tree});
  CHECK(fit.radius_ideal == tree.radii());
  CHECK(fit.objective_value == 0.0);
}

TEST_CASE("a wider daughter raises its parent") {
  std::vector<CenterlinePoint> pts(4);
  pts[0] = {0, std::nullopt, 0.0, 0.20, false};
  pts[1] = {1, PointId{0}, 0.1, 0.20, false};
  pts[2] = {2, PointId{1}, 0.1, 0.25, true};
  pts[3] = {3, PointId{1}, 0.1, 0.10, true};
  const CenterlineTree tree("y", pts);
  const auto fit = fit_ideal({tree, std::nullopt, std::nullopt});
  CHECK(fit.radius_ideal[1] == 0.25);
  CHECK(fit.radius_ideal[0] == 0.25);
  CHECK(fit.radius_ideal[3] == 0.10);
  CHECK(fit.objective_value == doctest::Approx(2.0 * std::sqrt(0.05)));
}

TEST_CASE("two points with a larger distal value") {
  const auto tree = path_of({0.1, 0.2});
  const auto fit = brute_force_ideal({tree, std::nullopt, std::nullopt});
  CHECK(fit.radius_ideal == std::vector<double>{0.2, 0.2});
}

TEST_CASE("lower bounds are honoured and infeasible bounds cannot arise") {
  const auto tree = path_of({0.2, 0.1, 0.1});
  const auto fit = fit_ideal({tree, std::vector<double>{0.2, 0.15, 0.1}, std::nullopt});
  CHECK(fit.radius_ideal[1] >= 0.15);
  CHECK(monotone(tree, fit.radius_ideal));
  CHECK_THROWS_AS(fit_ideal({tree, std::vector<double>{0.2, -0.1, 0.1}, std::nullopt}), Error);
}

TEST_CASE("refinement grid contains the input radii") {
  const auto tree = path_of({0.2013, 0.1, 0.15});
  const auto grid = candidate_radius_grid({tree, std::nullopt, 0.05});
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (double r : tree.radii()) CHECK(std::find(grid.begin(), grid.end(), r) != grid.end());
}

TEST_CASE("dynamic programme matches exhaustive search on random small trees") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  std::uniform_int_distribution<std::size_t> size(2, 8), nvals(2, 10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> values(nvals(rng));
    for (auto& v : values) v = u(rng);
    const auto tree = random_tree(rng, size(rng), values);
    const IdealFitProblem problem{tree, std::nullopt, std::nullopt};
    const auto dp = fit_ideal(problem);
    const auto bf = brute_force_ideal(problem);
    CHECK(dp.objective_value == doctest::Approx(bf.objective_value).epsilon(1e-9));
    CHECK(cost(tree, dp.radius_ideal) == doctest::Approx(dp.objective_value).epsilon(1e-12));
    CHECK(monotone(tree, dp.radius_ideal));
    for (PointId i = 0; i < tree.size(); ++i) CHECK(dp.radius_ideal[i] >= tree.radius(i));
  }
}

TEST_CASE("idempotence") {
  std::mt19937_64 rng(11);
  const auto tree = random_tree(rng, 200, {0.1, 0.12, 0.15, 0.2, 0.22});
  const auto once = fit_ideal({tree});
  const auto ideal = tree.with_radii(once.radius_ideal);
  const auto twice = fit_ideal({ideal, once.radius_ideal});
  CHECK(twice.radius_ideal == once.radius_ideal);
  CHECK(twice.objective_value == 0.0);
}

TEST_CASE("monotone on large trees") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> values(40);
    for (auto& v : values) v = u(rng);
    const auto tree = random_tree(rng, 1000, values);
    const auto fit = fit_ideal({tree});
    CHECK(monotone(tree, fit.radius_ideal));
  }
}

TEST_CASE("dilated tree") {
  const auto tree = path_of({0.2, 0.1});
  IdealProfile p{{0.3, 0.1}, 0.0};
  CHECK(dilated_tree(tree, p, 0.0).radii() == tree.radii());
  CHECK(dilated_tree(tree, p, 1.0).radii() == p.radius_ideal);
  CHECK(dilated_tree(tree, p, 0.5).radius(0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(dilated_tree(tree, p, 1.5), Error);
}
