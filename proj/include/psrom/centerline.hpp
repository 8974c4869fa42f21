#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psrom {

// Point ids are dense indices 0..n-1. Edges are identified by their distal
// point id, so per-edge arrays are indexed like per-point arrays and slot 0
// (the ostium, which has no incoming edge) carries the ostial value.
using PointId = std::size_t;

// 1 mmHg in dyn/cm^2.
inline constexpr double kMmHg = 1333.22;

struct CenterlinePoint {
  PointId id = 0;
  std::optional<PointId> parent;
  double arc_length_from_parent = 0.0;  // cm
  double radius = 0.0;                  // cm
  bool is_outlet = false;

  bool operator==(const CenterlinePoint&) const = default;
};

struct SegmentGeometry {
  PointId proximal_id = 0;
  PointId distal_id = 0;
  double length = 0.0;
  double radius_proximal = 0.0;
  double radius_distal = 0.0;
  double area_proximal = 0.0;
  double area_distal = 0.0;
  double area_gradient = 0.0;  // (A_distal - A_proximal) / length

  double mean_radius() const { return 0.5 * (radius_proximal + radius_distal); }
};

SegmentGeometry make_segment(PointId proximal, PointId distal, double length,
                             double radius_proximal, double radius_distal);

inline double circle_area(double radius) { return std::numbers::pi * radius * radius; }

/// Rooted centerline tree with a radius profile.
///
/// Construction validates every structural invariant: a single ostium of
/// degree one, parent id < child id, bifurcations only, outlets exactly at
/// the leaves, positive radii and segment lengths. Instances are immutable.
class CenterlineTree {
 public:
  CenterlineTree(std::string name, std::vector<CenterlinePoint> points,
                 std::string source = {});

  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }
  static constexpr const char* units() { return "CGS"; }

  std::size_t size() const { return points_.size(); }
  std::span<const CenterlinePoint> points() const { return points_; }
  const CenterlinePoint& point(PointId id) const { return points_.at(id); }

  static constexpr PointId ostium() { return 0; }
  PointId parent(PointId id) const { return *points_[id].parent; }
  std::span<const PointId> children(PointId id) const;
  bool is_branch(PointId id) const { return children(id).size() == 2; }
  bool is_outlet(PointId id) const { return points_[id].is_outlet; }
  const std::vector<PointId>& outlets() const { return outlets_; }
  std::vector<PointId> branch_points() const;

  double radius(PointId id) const { return points_[id].radius; }
  std::vector<double> radii() const;
  /// Cumulative arc length from the ostium, cm.
  double arc_length(PointId id) const { return arc_from_ostium_[id]; }

  /// Geometry of the edge ending at `distal` (distal must not be the ostium).
  SegmentGeometry segment(PointId distal) const;

  /// True iff `j` lies strictly proximal to `i` on the ostium-to-i path.
  bool is_distal(PointId i, PointId j) const;

  /// Same ids, parents and arc lengths; only radii may differ.
  bool same_topology(const CenterlineTree& other) const;

  /// Copy of this tree with a replacement radius profile.
  CenterlineTree with_radii(std::span<const double> radii, std::string name = {}) const;

  bool operator==(const CenterlineTree& other) const {
    return name_ == other.name_ && source_ == other.source_ && points_ == other.points_;
  }

 private:
  void validate_and_index();

  std::string name_;
  std::string source_;
  std::vector<CenterlinePoint> points_;
  std::vector<std::size_t> child_offset_;  // CSR offsets into child_ids_
  std::vector<PointId> child_ids_;
  std::vector<PointId> outlets_;
  std::vector<double> arc_from_ostium_;
  std::vector<std::uint32_t> enter_, exit_;  // preorder interval per point
};

/// Parses the tree document format (JSON, format_version 1).
CenterlineTree load_tree(std::istream& in);
CenterlineTree load_tree_from_string(const std::string& document);
CenterlineTree load_tree_file(const std::string& path);

std::string save_tree(const CenterlineTree& tree);
void save_tree_file(const CenterlineTree& tree, const std::string& path);

/// One ostium-to-outlet path per outlet, ordered by outlet id. The index of
/// a path in this list is its path id.
std::vector<std::vector<PointId>> root_to_leaf_paths(const CenterlineTree& tree);

/// One entry per parent-child edge, ordered by distal id.
std::vector<SegmentGeometry> segment_geometries(const CenterlineTree& tree);

inline bool is_distal(const CenterlineTree& tree, PointId i, PointId j) {
  return tree.is_distal(i, j);
}

/// Stable 64-bit FNV-1a digest of the canonical document.
std::uint64_t tree_digest(const CenterlineTree& tree);

}  // namespace psrom
