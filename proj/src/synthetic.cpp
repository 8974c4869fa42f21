#include "psrom/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "psrom/errors.hpp"

namespace psrom {
namespace {

struct Vessel {
  PointId proximal = 0;  // junction point (or the ostium)
  PointId first = 0;
  PointId last = 0;
  int level = 0;
  double length = 0.0;
  double radius_start = 0.0;
  bool terminal = false;
};

class Builder {
 public:
  Builder(const SyntheticConfig& config, std::mt19937_64& rng) : cfg_(config), rng_(rng) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  void build(int depth) {
    depth_ = depth;
    const double r0 = uniform(std::max(cfg_.min_radius, 0.7 * cfg_.max_radius), cfg_.max_radius);
    points_.push_back({0, std::nullopt, 0.0, r0, false});
    arc_.push_back(0.0);
    grow(0, r0, 0);
  }

  void grow(PointId proximal, double r_start, int level) {
    const bool terminal = level >= depth_ || (level >= 2 && uniform(0.0, 1.0) < 0.25);
    const double length = terminal ? uniform(cfg_.min_terminal_length, cfg_.max_terminal_length)
                                   : uniform(cfg_.min_vessel_length, cfg_.max_vessel_length);
    const double r_end = std::max(cfg_.min_radius, r_start * (1.0 - uniform(0.05, 0.2)));
    const int n = std::max(2, static_cast<int>(std::lround(length / cfg_.point_spacing)));
    const double ds = length / n;

    Vessel v{proximal, points_.size(), 0, level, length, r_start, terminal};
    PointId prev = proximal;
    for (int k = 1; k <= n; ++k) {
      const PointId id = points_.size();
      const double r = r_start + (r_end - r_start) * static_cast<double>(k) / n;
      points_.push_back({id, prev, ds, r, false});
      arc_.push_back(arc_[prev] + ds);
      prev = id;
    }
    v.last = prev;
    const std::size_t index = vessels_.size();
    vessels_.push_back(v);
    if (terminal) {
      points_[prev].is_outlet = true;
      return;
    }
    const double split = uniform(0.35, 0.65);
    const double r1 = std::max(cfg_.min_radius, r_end * std::cbrt(split));
    const double r2 = std::max(cfg_.min_radius, r_end * std::cbrt(1.0 - split));
    const PointId junction = vessels_[index].last;
    grow(junction, r1, level + 1);
    grow(junction, r2, level + 1);
  }

  // Raised-cosine narrowing centred on `center`, spreading along the
  // ancestor chain and into every descendant within half the length.
  void cut(PointId center, double narrowing, double length) {
    const double half = 0.5 * length;
    auto factor = [&](double distance) {
      if (distance > half) return 1.0;
      return 1.0 - narrowing * 0.5 * (1.0 + std::cos(std::numbers::pi * distance / half));
    };
    scale_[center] *= factor(0.0);
    for (PointId p = center; points_[p].parent;) {
      p = *points_[p].parent;
      const double d = arc_[center] - arc_[p];
      if (d > half) break;
      scale_[p] *= factor(d);
    }
    std::vector<PointId> stack{center};
    while (!stack.empty()) {
      const PointId p = stack.back();
      stack.pop_back();
      for (PointId c : children_[p]) {
        const double d = arc_[c] - arc_[center];
        if (d > half) continue;
        scale_[c] *= factor(d);
        stack.push_back(c);
      }
    }
  }

  void index_children() {
    children_.assign(points_.size(), {});
    for (const auto& p : points_)
      if (p.parent) children_[*p.parent].push_back(p.id);
    scale_.assign(points_.size(), 1.0);
  }

  // Centre point at `offset` cm into vessel v.
  PointId point_in(const Vessel& v, double offset) const {
    const double ds = v.length / static_cast<double>(v.last - v.first + 1);
    const auto k = static_cast<std::size_t>(std::clamp<long>(std::lround(offset / ds) - 1, 0,
                                                             static_cast<long>(v.last - v.first)));
    return v.first + k;
  }

  const SyntheticConfig& cfg_;
  std::mt19937_64& rng_;
  int depth_ = 0;
  std::vector<CenterlinePoint> points_;
  std::vector<double> arc_;
  std::vector<Vessel> vessels_;
  std::vector<std::vector<PointId>> children_;
  std::vector<double> scale_;
};

}  // namespace

SyntheticPatient generate_synthetic_patient(std::uint64_t seed, const SyntheticConfig& config) {
  if (config.min_depth < 1 || config.max_depth < config.min_depth) throw Error("invalid depth range");
  if (config.min_lesions < 0 || config.max_lesions < config.min_lesions) throw Error("invalid lesion count range");
  if (!(config.point_spacing > 0.0)) throw Error("point spacing must be positive");

  std::mt19937_64 rng(seed);
  Builder b(config, rng);
  b.build(b.uniform_int(config.min_depth, config.max_depth));
  b.index_children();

  std::vector<LesionLabel> labels;
  auto severity = [&] { return b.uniform(config.min_narrowing, config.max_narrowing); };
  auto lesion_length = [&](double cap) {
    return b.uniform(config.min_lesion_length, std::max(config.min_lesion_length, std::min(cap, config.max_lesion_length)));
  };
  auto place = [&](LesionKind kind, PointId center, double nu, double len) {
    b.cut(center, nu, len);
    labels.push_back({kind, center, nu, len});
  };

  // Interior placement in a vessel with room for the lesion plus margins;
  // prefers vessels of radius >= 0.1 cm.
  auto interior = [&](double len, double min_arc, std::vector<std::size_t> exclude) -> std::optional<PointId> {
    std::vector<std::size_t> candidates, fallback;
    for (std::size_t i = 0; i < b.vessels_.size(); ++i) {
      const auto& v = b.vessels_[i];
      if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
      const double lo = std::max(0.3 + 0.5 * len, min_arc + 0.5 * len - b.arc_[v.proximal]);
      const double hi = v.length - 0.3 - 0.5 * len;
      if (lo > hi) continue;
      (v.radius_start >= 0.1 ? candidates : fallback).push_back(i);
    }
    if (candidates.empty()) candidates = fallback;
    if (candidates.empty()) return std::nullopt;
    const auto& v = b.vessels_[candidates[b.uniform_int(0, static_cast<int>(candidates.size()) - 1)]];
    const double lo = std::max(0.3 + 0.5 * len, min_arc + 0.5 * len - b.arc_[v.proximal]);
    const double hi = v.length - 0.3 - 0.5 * len;
    return b.point_in(v, b.uniform(lo, hi));
  };
  auto vessel_of = [&](PointId p) {
    for (std::size_t i = 0; i < b.vessels_.size(); ++i)
      if (p >= b.vessels_[i].first && p <= b.vessels_[i].last) return i;
    return std::size_t{0};
  };

  const int scenario = b.uniform_int(0, 3);
  const int wanted = config.max_lesions == 0 ? 0 : b.uniform_int(std::max(1, config.min_lesions), config.max_lesions);
  bool placed = false;
  if (wanted > 0 && scenario == 1) {
    const auto& root = b.vessels_[0];
    const double len = lesion_length(std::min(1.0, root.length - 0.6));
    if (root.length >= len + 0.6) {
      place(LesionKind::Ostial, b.point_in(root, 0.5 * len + b.uniform(0.1, 0.3)), severity(), len);
      placed = true;
    }
  } else if (wanted > 0 && scenario == 2) {
    std::vector<std::size_t> junctions;
    for (std::size_t i = 0; i < b.vessels_.size(); ++i)
      if (!b.vessels_[i].terminal && b.vessels_[i].radius_start >= 0.1) junctions.push_back(i);
    if (!junctions.empty()) {
      const auto& v = b.vessels_[junctions[b.uniform_int(0, static_cast<int>(junctions.size()) - 1)]];
      double room = v.length;
      for (PointId c : b.children_[v.last]) room = std::min(room, b.vessels_[vessel_of(c)].length);
      const double len = lesion_length(std::min(1.2, 2.0 * (room - 0.3)));
      if (0.5 * len <= room - 0.3 && b.arc_[v.last] - 0.5 * len > 1.0) {
        place(LesionKind::Bifurcation, v.last, severity(), len);
        placed = true;
      }
    }
  } else if (wanted >= 3 && scenario == 3) {
    // Tandem lesions along the longest path, clear of its branch points.
    PointId leaf = 0;
    for (PointId i = 0; i < b.points_.size(); ++i)
      if (b.points_[i].is_outlet && b.arc_[i] > b.arc_[leaf]) leaf = i;
    std::vector<PointId> path;
    for (PointId p = leaf;; p = *b.points_[p].parent) {
      path.push_back(p);
      if (!b.points_[p].parent) break;
    }
    std::reverse(path.begin(), path.end());
    const int count = std::min(wanted, 4);
    const double start = 1.2, end = b.arc_[leaf] - 2.5;
    const double slot = (end - start) / count;
    if (slot >= 1.0) {
      std::vector<std::tuple<PointId, double, double>> chosen;
      for (int k = 0; k < count; ++k) {
        const double len = lesion_length(std::min(1.0, slot - 0.5));
        for (int attempt = 0; attempt < 20; ++attempt) {
          const double s = start + k * slot + 0.25 + 0.5 * len + b.uniform(0.0, std::max(0.0, slot - 0.5 - len));
          const auto it = std::lower_bound(path.begin(), path.end(), s,
                                           [&](PointId p, double value) { return b.arc_[p] < value; });
          if (it == path.end()) break;
          const bool clear = std::none_of(path.begin(), path.end(), [&](PointId p) {
            return b.children_[p].size() == 2 && std::abs(b.arc_[p] - b.arc_[*it]) <= 0.5 * len + 0.1;
          });
          if (clear) {
            chosen.emplace_back(*it, severity(), len);
            break;
          }
        }
      }
      if (chosen.size() >= 3) {
        for (auto& [c, nu, len] : chosen) place(LesionKind::SerialMember, c, nu, len);
        placed = true;
      }
    }
  }
  if (wanted > 0 && !placed) {
    // Focal: one or two lesions in distinct vessels, beyond the ostial zone.
    const int count = std::min(wanted, 2);
    std::vector<std::size_t> used;
    for (int k = 0; k < count; ++k) {
      const double len = lesion_length(config.max_lesion_length);
      if (auto c = interior(len, 1.0 + 0.3, used)) {
        place(LesionKind::Focal, *c, severity(), len);
        used.push_back(vessel_of(*c));
      }
    }
  }

  auto points = b.points_;
  for (auto& p : points) p.radius *= b.scale_[p.id];
  CenterlineTree tree("synthetic-" + std::to_string(seed), std::move(points), "synthetic");
  auto bc = default_boundary_conditions(tree, config.aortic_pressure);
  return {seed, std::move(tree), std::move(labels), std::move(bc)};
}

SyntheticPatient generate_sized_patient(std::uint64_t seed, std::size_t target_points, SyntheticConfig config) {
  if (target_points < 16) throw Error("target point count too small");
  const auto probe = generate_synthetic_patient(seed, config);
  double total = 0.0;
  for (const auto& p : probe.tree.points()) total += p.arc_length_from_parent;
  config.point_spacing = total / static_cast<double>(target_points);
  return generate_synthetic_patient(seed, config);
}

}  // namespace psrom
