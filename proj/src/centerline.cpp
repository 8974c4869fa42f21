#include "psrom/centerline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "psrom/errors.hpp"

namespace psrom {
namespace {

using nlohmann::json;

std::string id_list(const std::vector<PointId>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size() && i < 8; ++i) out << (i ? ", " : "") << ids[i];
  if (ids.size() > 8) out << ", ...";
  return out.str();
}

[[noreturn]] void invalid(const std::string& what) { throw TreeValidationError(what); }

}  // namespace

SegmentGeometry make_segment(PointId proximal, PointId distal, double length,
                             double radius_proximal, double radius_distal) {
  SegmentGeometry g;
  g.proximal_id = proximal;
  g.distal_id = distal;
  g.length = length;
  g.radius_proximal = radius_proximal;
  g.radius_distal = radius_distal;
  g.area_proximal = circle_area(radius_proximal);
  g.area_distal = circle_area(radius_distal);
  g.area_gradient = (g.area_distal - g.area_proximal) / length;
  return g;
}

CenterlineTree::CenterlineTree(std::string name, std::vector<CenterlinePoint> points,
                               std::string source)
    : name_(std::move(name)), source_(std::move(source)), points_(std::move(points)) {
  validate_and_index();
}

void CenterlineTree::validate_and_index() {
  const std::size_t n = points_.size();
  if (n < 2) invalid("tree needs at least an ostium and one outlet");

  for (std::size_t i = 0; i < n; ++i) {
    if (points_[i].id != i) invalid("point ids must be dense and sorted; found id " +
                                    std::to_string(points_[i].id) + " at position " +
                                    std::to_string(i));
  }

  std::vector<PointId> dangling;
  for (const auto& p : points_) {
    if (p.parent && (*p.parent >= n || *p.parent == p.id)) dangling.push_back(p.id);
  }
  if (!dangling.empty()) invalid("dangling parent reference at point(s) " + id_list(dangling));

  // Walk parent chains; a chain revisiting a point on the current walk is a cycle.
  {
    std::vector<std::uint8_t> state(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<PointId> walk;
    for (PointId start = 0; start < n; ++start) {
      walk.clear();
      PointId cur = start;
      while (state[cur] == 0) {
        state[cur] = 1;
        walk.push_back(cur);
        if (!points_[cur].parent) break;
        cur = *points_[cur].parent;
        if (state[cur] == 1) {
          std::vector<PointId> cycle(std::find(walk.begin(), walk.end(), cur), walk.end());
          std::sort(cycle.begin(), cycle.end());
          invalid("parent cycle through point(s) " + id_list(cycle));
        }
      }
      for (PointId w : walk) state[w] = 2;
    }
  }

  std::vector<PointId> roots;
  for (const auto& p : points_)
    if (!p.parent) roots.push_back(p.id);
  if (roots.size() != 1) invalid("expected exactly one ostium, found point(s) " + id_list(roots));
  if (roots.front() != 0) invalid("ostium must have id 0, found " + std::to_string(roots.front()));

  std::vector<PointId> unordered;
  for (const auto& p : points_)
    if (p.parent && *p.parent > p.id) unordered.push_back(p.id);
  if (!unordered.empty())
    invalid("points not topologically ordered (parent id > id) at " + id_list(unordered));

  std::vector<PointId> bad_radius, bad_length;
  for (const auto& p : points_) {
    if (!(p.radius > 0.0) || !std::isfinite(p.radius)) bad_radius.push_back(p.id);
    if (p.parent && (!(p.arc_length_from_parent > 0.0) || !std::isfinite(p.arc_length_from_parent)))
      bad_length.push_back(p.id);
  }
  if (!bad_radius.empty()) invalid("non-positive radius at point(s) " + id_list(bad_radius));
  if (!bad_length.empty()) invalid("non-positive arc length at point(s) " + id_list(bad_length));

  std::vector<std::size_t> count(n, 0);
  for (const auto& p : points_)
    if (p.parent) ++count[*p.parent];

  std::vector<PointId> too_many, bad_outlet, bad_leaf;
  for (PointId i = 0; i < n; ++i) {
    if (count[i] > 2) too_many.push_back(i);
    if (count[i] == 0 && !points_[i].is_outlet) bad_leaf.push_back(i);
    if (count[i] > 0 && points_[i].is_outlet) bad_outlet.push_back(i);
  }
  if (!too_many.empty())
    invalid("more than two children (only bifurcations supported) at point(s) " + id_list(too_many));
  if (count[0] != 1) invalid("ostium must have exactly one child, found " + std::to_string(count[0]));
  if (!bad_leaf.empty()) invalid("leaf point(s) not marked as outlet: " + id_list(bad_leaf));
  if (!bad_outlet.empty()) invalid("interior point(s) marked as outlet: " + id_list(bad_outlet));

  child_offset_.assign(n + 1, 0);
  for (PointId i = 0; i < n; ++i) child_offset_[i + 1] = child_offset_[i] + count[i];
  child_ids_.assign(n - 1, 0);
  std::vector<std::size_t> fill(child_offset_.begin(), child_offset_.end() - 1);
  for (const auto& p : points_)
    if (p.parent) child_ids_[fill[*p.parent]++] = p.id;

  outlets_.clear();
  arc_from_ostium_.assign(n, 0.0);
  for (PointId i = 0; i < n; ++i) {
    if (points_[i].parent)
      arc_from_ostium_[i] = arc_from_ostium_[*points_[i].parent] + points_[i].arc_length_from_parent;
    if (points_[i].is_outlet) outlets_.push_back(i);
  }

  enter_.assign(n, 0);
  exit_.assign(n, 0);
  std::uint32_t clock = 0;
  std::vector<std::pair<PointId, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    if (done) {
      exit_[id] = clock;
      continue;
    }
    enter_[id] = clock++;
    stack.emplace_back(id, true);
    auto kids = children(id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.emplace_back(*it, false);
  }
}

std::span<const PointId> CenterlineTree::children(PointId id) const {
  return {child_ids_.data() + child_offset_[id], child_offset_[id + 1] - child_offset_[id]};
}

std::vector<PointId> CenterlineTree::branch_points() const {
  std::vector<PointId> out;
  for (PointId i = 0; i < size(); ++i)
    if (is_branch(i)) out.push_back(i);
  return out;
}

std::vector<double> CenterlineTree::radii() const {
  std::vector<double> r(size());
  for (PointId i = 0; i < size(); ++i) r[i] = points_[i].radius;
  return r;
}

SegmentGeometry CenterlineTree::segment(PointId distal) const {
  const auto& p = points_.at(distal);
  if (!p.parent) throw Error("the ostium has no incoming segment");
  return make_segment(*p.parent, distal, p.arc_length_from_parent, points_[*p.parent].radius,
                      p.radius);
}

bool CenterlineTree::is_distal(PointId i, PointId j) const {
  if (i == j) return false;
  return enter_.at(j) < enter_.at(i) && enter_[i] < exit_[j];
}

bool CenterlineTree::same_topology(const CenterlineTree& other) const {
  if (size() != other.size()) return false;
  for (PointId i = 0; i < size(); ++i) {
    const auto& a = points_[i];
    const auto& b = other.points_[i];
    if (a.parent != b.parent || a.is_outlet != b.is_outlet ||
        a.arc_length_from_parent != b.arc_length_from_parent)
      return false;
  }
  return true;
}

CenterlineTree CenterlineTree::with_radii(std::span<const double> radii, std::string name) const {
  if (radii.size() != size()) throw Error("radius profile size does not match tree");
  auto pts = points_;
  for (PointId i = 0; i < size(); ++i) pts[i].radius = radii[i];
  return CenterlineTree(name.empty() ? name_ : std::move(name), std::move(pts), source_);
}

// --- serialization ---------------------------------------------------------

namespace {

CenterlineTree tree_from_json(const json& doc) {
  if (!doc.is_object()) invalid("tree document must be an object");
  if (!doc.contains("format_version") || doc["format_version"] != 1)
    invalid("unsupported or missing format_version (expected 1)");
  if (doc.contains("units") && doc["units"] != "CGS") invalid("units must be CGS");
  if (!doc.contains("points") || !doc["points"].is_array()) invalid("missing points array");

  std::vector<CenterlinePoint> pts;
  pts.reserve(doc["points"].size());
  for (const auto& rec : doc["points"]) {
    if (!rec.is_object()) invalid("point record must be an object");
    CenterlinePoint p;
    try {
      const auto& id = rec.at("id");
      if (!id.is_number_unsigned()) invalid("point id must be a non-negative integer");
      p.id = id.get<PointId>();
      const auto& parent = rec.at("parent");
      if (!parent.is_null()) {
        if (!parent.is_number_unsigned()) invalid("parent of point " + std::to_string(p.id) +
                                                  " must be null or a non-negative integer");
        p.parent = parent.get<PointId>();
      }
      p.arc_length_from_parent = rec.at("arc_length_from_parent").get<double>();
      p.radius = rec.at("radius").get<double>();
      p.is_outlet = rec.at("is_outlet").get<bool>();
    } catch (const json::exception& e) {
      invalid(std::string("malformed point record: ") + e.what());
    }
    pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].id == pts[i - 1].id) invalid("duplicate point id " + std::to_string(pts[i].id));

  return CenterlineTree(doc.value("name", std::string{}), std::move(pts),
                        doc.value("source", std::string{}));
}

}  // namespace

CenterlineTree load_tree(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    invalid(std::string("malformed tree document: ") + e.what());
  }
  return tree_from_json(doc);
}

CenterlineTree load_tree_from_string(const std::string& document) {
  std::istringstream in(document);
  return load_tree(in);
}

CenterlineTree load_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tree file " + path);
  return load_tree(in);
}

std::string save_tree(const CenterlineTree& tree) {
  json points = json::array();
  for (const auto& p : tree.points()) {
    points.push_back({{"id", p.id},
                      {"parent", p.parent ? json(*p.parent) : json(nullptr)},
                      {"arc_length_from_parent", p.arc_length_from_parent},
                      {"radius", p.radius},
                      {"is_outlet", p.is_outlet}});
  }
  json doc = {{"format_version", 1},
              {"name", tree.name()},
              {"source", tree.source()},
              {"units", CenterlineTree::units()},
              {"points", std::move(points)}};
  return doc.dump();
}

void save_tree_file(const CenterlineTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write tree file " + path);
  out << save_tree(tree) << '\n';
}

std::vector<std::vector<PointId>> root_to_leaf_paths(const CenterlineTree& tree) {
  std::vector<std::vector<PointId>> paths;
  paths.reserve(tree.outlets().size());
  for (PointId leaf : tree.outlets()) {
    std::vector<PointId> path;
    for (PointId cur = leaf;; cur = tree.parent(cur)) {
      path.push_back(cur);
      if (cur == CenterlineTree::ostium()) break;
    }
    std::reverse(path.begin(), path.end());
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<SegmentGeometry> segment_geometries(const CenterlineTree& tree) {
  std::vector<SegmentGeometry> out;
  out.reserve(tree.size() - 1);
  for (PointId k = 1; k < tree.size(); ++k) out.push_back(tree.segment(k));
  return out;
}

std::uint64_t tree_digest(const CenterlineTree& tree) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : save_tree(tree)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace psrom
