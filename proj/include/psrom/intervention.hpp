#pragma once

#include <set>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/ideal_geometry.hpp"

namespace psrom {

enum class LesionKind { Focal, Ostial, Bifurcation, SerialMember };

const char* lesion_kind_name(LesionKind kind);
LesionKind parse_lesion_kind(const std::string& name);

struct Lesion {
  std::size_t path_id = 0;  // representative path (through the most narrowed point)
  double arc_start = 0.0;   // cm, on the representative path
  double arc_end = 0.0;
  double max_narrowing = 0.0;
  LesionKind kind = LesionKind::Focal;
  std::vector<PointId> member_point_ids;  // ascending; a connected subtree
};

struct LesionOptions {
  double threshold = 0.30;    // minimum narrowing 1 - r_orig / r_ideal
  double merge_gap = 0.2;     // cm; closer runs along a path are merged
  double ostial_zone = 1.0;   // cm from the ostium
};

/// Pointwise narrowing 1 - r_orig / r_ideal.
std::vector<double> narrowing(const CenterlineTree& patient, const std::vector<double>& ideal_radii);

/// Connected runs of points with narrowing >= threshold, bridging gaps
/// shorter than merge_gap along each path. Kinds are left as Focal; see
/// classify_lesions.
std::vector<Lesion> detect_lesions(const CenterlineTree& patient, const IdealProfile& ideal,
                                   const LesionOptions& options = {});

/// Precedence serial > bifurcation > ostial > focal.
LesionKind classify_lesion(const CenterlineTree& tree, const Lesion& lesion,
                           const std::vector<Lesion>& all_lesions, const LesionOptions& options = {});

void classify_lesions(const CenterlineTree& tree, std::vector<Lesion>& lesions,
                      const LesionOptions& options = {});

/// Indices of root_to_leaf_paths() that contain a member of the lesion.
std::vector<std::size_t> paths_through(const CenterlineTree& tree, const Lesion& lesion);

struct PlanInterval {
  std::size_t path_id = 0;
  double arc_start = 0.0;  // cm from the ostium
  double arc_end = 0.0;
  double target_fraction = 1.0;
};

struct ModificationPlan {
  std::vector<PlanInterval> intervals;
  double blend_length = 0.2;  // cm
};

struct ModifiedGeometry {
  CenterlineTree tree;
  std::set<PointId> modified_edges;
};

/// Smoothstep ramp 3t^2 - 2t^3 of the dilation fraction over blend_length
/// inside each end of an interval.
double blend_weight(double arc, double arc_start, double arc_end, double blend_length);

/// Within every interval r = r_orig + f (r_ideal - r_orig), f the ramped
/// target fraction. Throws EnvelopeError for fractions outside [0, 1] and
/// Error for invalid paths or overlapping intervals with different targets.
ModifiedGeometry apply_modification(const CenterlineTree& patient, const std::vector<double>& ideal_radii,
                                    const ModificationPlan& plan);

/// One interval per path through the lesion, padded by the blend length so
/// the lesion itself is fully restored.
ModificationPlan full_idealization_plan(const CenterlineTree& tree, const Lesion& lesion,
                                        double target_fraction = 1.0, double blend_length = 0.2);

struct EvaluationOptions {
  double recovery_zone = 2.0;     // cm past the last modified edge
  double branch_clearance = 0.3;  // cm
};

/// First point per downstream path beyond the recovery zone, clear of
/// bifurcations and proximal to the outlet. Ascending and de-duplicated.
std::vector<PointId> select_evaluation_points(const CenterlineTree& tree,
                                              const std::set<PointId>& modified_edges,
                                              const EvaluationOptions& options = {});

/// `path,arc_start,arc_end,max_narrowing,kind,points` rows.
std::string lesions_to_csv(const std::vector<Lesion>& lesions);

}  // namespace psrom
