#pragma once

#include <chrono>
#include <cstddef>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/intervention.hpp"
#include "psrom/network_solver.hpp"
#include "psrom/predictor_corrector.hpp"
#include "psrom/response_surface.hpp"

namespace psrom {

struct PlannerConfig {
  std::size_t max_models = 32;  // LRU bound on in-memory sessions
  std::string store_dir;        // empty: memory only
  SolverConfig solver;
  OracleOptions oracle;
  LesionOptions lesions;
  EvaluationOptions evaluation;
};

/// Everything built for one uploaded tree. Immutable once published.
struct ModelSession {
  std::string model_id;
  ResponseSurface surface;
  IdealProfile ideal;
  std::vector<Lesion> lesions;
  std::vector<std::vector<PointId>> paths;
  std::string created_at;  // UTC, ISO 8601
  double build_seconds = 0.0;
};

/// Status code and JSON body (same text format family as the tree file).
/// Errors carry {"error": {"code": ..., "message": ...}}.
struct ServiceResponse {
  int status = 200;
  std::string body;
};

/// Request handlers behind the HTTP routes; callable directly. Sessions are
/// shared immutable snapshots so concurrent evaluations need no locking;
/// the store itself is guarded and concurrent creates of the same model
/// collapse into one build.
class PlannerService {
 public:
  explicit PlannerService(PlannerConfig config = {});

  /// Body: a tree document, or {"tree": doc, "boundary_conditions": {...}}.
  ServiceResponse create_model(const std::string& body);
  ServiceResponse list_lesions(const std::string& model_id);
  /// Body: {"intervals": [{path_id, arc_start, arc_end, target_fraction}],
  /// "blend_length"?, "paths"?: [ids], "state"?: "hyperemia" | "superemia"}.
  ServiceResponse evaluate_plan(const std::string& model_id, const std::string& body);
  /// Pre-modification (patient hyperemia) traces, one path or all.
  ServiceResponse traces(const std::string& model_id, std::optional<std::string> path);
  ServiceResponse delete_model(const std::string& model_id);

  std::size_t model_count() const;
  std::size_t builds_started() const;
  const PlannerConfig& config() const { return config_; }

  /// Stable id for a tree and boundary condition set.
  static std::string model_id_for(const CenterlineTree& tree, const BoundaryConditionSet& bc);

 private:
  using SessionPtr = std::shared_ptr<const ModelSession>;

  SessionPtr find(const std::string& model_id);
  void insert(const SessionPtr& session);
  SessionPtr build(const std::string& model_id, const CenterlineTree& tree, const BoundaryConditionSet& bc);
  SessionPtr session_from_surface(const std::string& model_id, ResponseSurface surface, double build_seconds);
  std::string store_path(const std::string& model_id) const;

  PlannerConfig config_;
  mutable std::mutex mutex_;
  std::list<std::string> lru_;  // front = most recent
  struct Entry {
    SessionPtr session;
    std::list<std::string>::iterator position;
  };
  std::unordered_map<std::string, Entry> sessions_;
  std::unordered_map<std::string, std::shared_future<SessionPtr>> in_flight_;
  std::size_t builds_started_ = 0;
};

}  // namespace psrom
