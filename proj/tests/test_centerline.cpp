#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "psrom/centerline.hpp"
#include "psrom/errors.hpp"

using namespace psrom;
using psrom::testing::bifurcation;
using psrom::testing::chain;

namespace {

std::string doc(const std::string& points) {
  return R"({"format_version": 1, "name": "t", "units": "CGS", "points": [)" + points + "]}";
}

}  // namespace

TEST_CASE("a minimal document round-trips") {
  const auto tree = load_tree_from_string(doc(R"(
    {"id": 0, "parent": null, "arc_length_from_parent": 0, "radius": 0.2, "is_outlet": false},
    {"id": 1, "parent": 0, "arc_length_from_parent": 0.5, "radius": 0.19, "is_outlet": false},
    {"id": 2, "parent": 1, "arc_length_from_parent": 0.5, "radius": 0.15, "is_outlet": true},
    {"id": 3, "parent": 1, "arc_length_from_parent": 0.7, "radius": 0.12, "is_outlet": true})"));
  CHECK(tree.size() == 4);
  CHECK(tree.outlets() == std::vector<PointId>{2, 3});
  CHECK(tree.is_branch(1));
  CHECK(tree.arc_length(3) == doctest::Approx(1.2));
  CHECK(load_tree_from_string(save_tree(tree)) == tree);
  CHECK(tree_digest(tree) == tree_digest(load_tree_from_string(save_tree(tree))));
}

TEST_CASE("points may arrive out of order") {
  const auto tree = load_tree_from_string(doc(R"(
    {"id": 1, "parent": 0, "arc_length_from_parent": 1, "radius": 0.1, "is_outlet": true},
    {"id": 0, "parent": null, "arc_length_from_parent": 0, "radius": 0.2, "is_outlet": false})"));
  CHECK(tree.size() == 2);
  CHECK(tree.radius(1) == 0.1);
}

TEST_CASE("structural violations are rejected") {
  const std::string ostium =
      R"({"id": 0, "parent": null, "arc_length_from_parent": 0, "radius": 0.2, "is_outlet": false})";
  auto pt = [](int id, const char* parent, double len, double r, bool outlet) {
    return std::string(R"(,{"id": )") + std::to_string(id) + R"(, "parent": )" + parent +
           R"(, "arc_length_from_parent": )" + std::to_string(len) + R"(, "radius": )" + std::to_string(r) +
           R"(, "is_outlet": )" + (outlet ? "true" : "false") + "}";
  };
  CHECK_THROWS_AS(load_tree_from_string("{not json"), TreeValidationError);
  CHECK_THROWS_AS(load_tree_from_string(R"({"points": []})"), TreeValidationError);
  // second root
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.1, true) + pt(2, "null", 1, 0.1, true))),
                  TreeValidationError);
  // dangling parent
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "7", 1, 0.1, true))), TreeValidationError);
  // trifurcation
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.1, false) + pt(2, "1", 1, 0.1, true) +
                                            pt(3, "1", 1, 0.1, true) + pt(4, "1", 1, 0.1, true))),
                  TreeValidationError);
  // leaf not marked as outlet, interior outlet
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.1, false))), TreeValidationError);
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.1, true) + pt(2, "1", 1, 0.1, true))),
                  TreeValidationError);
  // non-positive radius and length
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.0, true))), TreeValidationError);
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 0, 0.1, true))), TreeValidationError);
  // duplicate id
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "0", 1, 0.1, true) + pt(1, "0", 1, 0.1, true))),
                  TreeValidationError);
  // parent after child
  CHECK_THROWS_AS(load_tree_from_string(doc(ostium + pt(1, "2", 1, 0.1, true) + pt(2, "0", 1, 0.1, false))),
                  TreeValidationError);
}

TEST_CASE("segment geometry") {
  const auto tree = chain(3, 0.5, [](double s) { return 0.2 - 0.1 * s; });
  const auto g = tree.segment(2);
  CHECK(g.proximal_id == 1);
  CHECK(g.length == doctest::Approx(0.5));
  CHECK(g.area_proximal == doctest::Approx(std::numbers::pi * 0.15 * 0.15));
  CHECK(g.area_gradient == doctest::Approx((circle_area(0.1) - circle_area(0.15)) / 0.5));
  CHECK_THROWS_AS(tree.segment(0), Error);
  CHECK(segment_geometries(tree).size() == 2);
}

TEST_CASE("paths and ancestry on a bifurcation") {
  const auto tree = bifurcation(3, 2, 0.1, 0.2, 0.8, 0.7);
  const auto paths = root_to_leaf_paths(tree);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0] == std::vector<PointId>{0, 1, 2, 3, 4});
  CHECK(paths[1] == std::vector<PointId>{0, 1, 2, 5, 6});
  CHECK(tree.is_distal(6, 2));
  CHECK_FALSE(tree.is_distal(6, 4));
  CHECK_FALSE(tree.is_distal(2, 2));
  CHECK(tree.branch_points() == std::vector<PointId>{2});
  CHECK(tree.arc_length(6) == doctest::Approx(0.4));
}

TEST_CASE("with_radii keeps topology") {
  const auto tree = bifurcation(3, 2, 0.1, 0.2, 0.8, 0.7);
  std::vector<double> r(tree.size(), 0.05);
  const auto other = tree.with_radii(r);
  CHECK(other.same_topology(tree));
  CHECK(other.radius(4) == 0.05);
  CHECK_THROWS_AS(tree.with_radii(std::vector<double>(3, 0.1)), Error);
  CHECK_THROWS(tree.with_radii(std::vector<double>(tree.size(), 0.0)));
}
