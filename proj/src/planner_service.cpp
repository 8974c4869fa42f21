#include "psrom/planner_service.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "psrom/errors.hpp"

namespace psrom {

using nlohmann::json;

namespace {

ServiceResponse reply(int status, const json& body) { return {status, body.dump()}; }

ServiceResponse error_reply(int status, const std::string& code, const std::string& message,
                            json extra = json::object()) {
  json err = {{"code", code}, {"message", message}};
  for (auto& [k, v] : extra.items()) err[k] = v;
  return reply(status, {{"error", err}});
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

BoundaryConditionSet parse_boundary_conditions(const json& j, const CenterlineTree& tree) {
  BoundaryConditionSet bc;
  bc.aortic_pressure = j.value("aortic_pressure", kDefaultAorticPressure);
  bc.viscosity = j.value("viscosity", kDefaultViscosity);
  bc.density = j.value("density", kDefaultDensity);
  const auto& outlets = j.at("outlet_resistances");
  if (outlets.is_object()) {
    for (auto& [key, value] : outlets.items()) bc.outlet_resistances[std::stoull(key)] = value.get<double>();
  } else {
    for (const auto& o : outlets) bc.outlet_resistances[o.at("id").get<PointId>()] = o.at("resistance").get<double>();
  }
  bc.validate(tree);
  return bc;
}

json trace_json(std::size_t path_id, const std::vector<PointId>& path, const CenterlineTree& tree,
                const std::vector<double>& ffr, const std::vector<double>* ffr_post) {
  json arc = json::array(), pre = json::array(), post = json::array();
  for (PointId id : path) {
    arc.push_back(tree.arc_length(id));
    pre.push_back(ffr[id]);
    if (ffr_post) post.push_back((*ffr_post)[id]);
  }
  json t = {{"path_id", path_id}, {"point_ids", path}, {"arc_length", arc}};
  if (ffr_post) {
    t["ffr_pre"] = pre;
    t["ffr_post"] = post;
  } else {
    t["ffr"] = pre;
  }
  return t;
}

json plan_json(const ModificationPlan& plan) {
  json intervals = json::array();
  for (const auto& iv : plan.intervals)
    intervals.push_back({{"path_id", iv.path_id},
                         {"arc_start", iv.arc_start},
                         {"arc_end", iv.arc_end},
                         {"target_fraction", iv.target_fraction}});
  return {{"blend_length", plan.blend_length}, {"intervals", intervals}};
}

json summary_json(const ModelSession& s, bool created) {
  json anchors = json::array();
  for (AnchorConfig c : kAnchorConfigs) {
    const auto& sol = s.surface.anchors[c];
    json outlet_ffr = json::array();
    for (PointId id : s.surface.patient.outlets()) outlet_ffr.push_back({{"id", id}, {"ffr", sol.ffr[id]}});
    anchors.push_back({{"label", anchor_label(c)},
                       {"converged", sol.converged},
                       {"iterations", sol.iterations},
                       {"ostial_flow", sol.ostial_flow},
                       {"outlet_ffr", outlet_ffr}});
  }
  return {{"model_id", s.model_id},
          {"created", created},
          {"created_at", s.created_at},
          {"build_seconds", s.build_seconds},
          {"build_path", "offline"},
          {"points", s.surface.patient.size()},
          {"outlets", s.surface.patient.outlets().size()},
          {"paths", s.paths.size()},
          {"lesion_count", s.lesions.size()},
          {"anchors", anchors}};
}

}  // namespace

PlannerService::PlannerService(PlannerConfig config) : config_(std::move(config)) {
  config_.solver.validate();
  if (config_.max_models == 0) throw Error("max_models must be at least 1");
  if (!config_.store_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config_.store_dir, ec);
    if (ec) throw Error("cannot create store directory " + config_.store_dir + ": " + ec.message());
  }
}

std::string PlannerService::model_id_for(const CenterlineTree& tree, const BoundaryConditionSet& bc) {
  std::ostringstream doc;
  doc.precision(17);
  doc << save_tree(tree) << '|' << bc.aortic_pressure << '|' << bc.viscosity << '|' << bc.density;
  for (const auto& [id, r] : bc.outlet_resistances) doc << '|' << id << ':' << r;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : doc.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string PlannerService::store_path(const std::string& model_id) const {
  return (std::filesystem::path(config_.store_dir) / (model_id + ".surface.json")).string();
}

std::size_t PlannerService::model_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t PlannerService::builds_started() const {
  std::lock_guard lock(mutex_);
  return builds_started_;
}

void PlannerService::insert(const SessionPtr& session) {
  std::lock_guard lock(mutex_);
  if (auto it = sessions_.find(session->model_id); it != sessions_.end()) {
    lru_.erase(it->second.position);
    sessions_.erase(it);
  }
  lru_.push_front(session->model_id);
  sessions_[session->model_id] = {session, lru_.begin()};
  while (sessions_.size() > config_.max_models) {
    sessions_.erase(lru_.back());
    lru_.pop_back();
  }
}

PlannerService::SessionPtr PlannerService::find(const std::string& model_id) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = sessions_.find(model_id); it != sessions_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.position);
      return it->second.session;
    }
  }
  if (config_.store_dir.empty() || model_id.find_first_not_of("0123456789abcdef") != std::string::npos)
    return nullptr;
  std::ifstream in(store_path(model_id), std::ios::binary);
  if (!in) return nullptr;
  std::stringstream buf;
  buf << in.rdbuf();
  auto session = session_from_surface(model_id, load_surface(buf.str()), 0.0);
  insert(session);
  return session;
}

PlannerService::SessionPtr PlannerService::session_from_surface(const std::string& model_id,
                                                                ResponseSurface surface,
                                                                double build_seconds) {
  IdealProfile ideal{surface.ideal.radii(), ideal_objective(surface.patient, surface.ideal.radii())};
  auto lesions = detect_lesions(surface.patient, ideal, config_.lesions);
  classify_lesions(surface.patient, lesions, config_.lesions);
  auto paths = root_to_leaf_paths(surface.patient);
  auto s = std::make_shared<const ModelSession>(ModelSession{model_id, std::move(surface), std::move(ideal),
                                                             std::move(lesions), std::move(paths), utc_now(),
                                                             build_seconds});
  return s;
}

PlannerService::SessionPtr PlannerService::build(const std::string& model_id, const CenterlineTree& tree,
                                                 const BoundaryConditionSet& bc) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ideal = fit_ideal({tree, std::nullopt, std::nullopt});
  const auto ideal_tree = tree.with_radii(ideal.radius_ideal, tree.name() + "-ideal");
  auto surface = build_response_surface(tree, ideal_tree, bc, config_.oracle);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto session = session_from_surface(model_id, std::move(surface), seconds);
  if (!config_.store_dir.empty()) {
    const auto path = store_path(model_id);
    const auto tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << save_surface(session->surface);
      if (!out) throw Error("failed to persist surface to " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }
  return session;
}

ServiceResponse PlannerService::create_model(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_reply(400, "malformed_json", e.what());
  }
  std::optional<CenterlineTree> tree;
  BoundaryConditionSet bc;
  try {
    const bool wrapped = doc.is_object() && doc.contains("tree");
    tree.emplace(load_tree_from_string((wrapped ? doc["tree"] : doc).dump()));
    if (wrapped && doc.contains("boundary_conditions"))
      bc = parse_boundary_conditions(doc["boundary_conditions"], *tree);
    else
      bc = default_boundary_conditions(*tree);
  } catch (const TreeValidationError& e) {
    return error_reply(400, "invalid_tree", e.what());
  } catch (const Error& e) {
    return error_reply(400, "invalid_request", e.what());
  } catch (const std::exception& e) {
    return error_reply(400, "invalid_boundary_conditions", e.what());
  }

  const auto id = model_id_for(*tree, bc);
  if (auto existing = find(id)) return reply(200, summary_json(*existing, false));

  std::shared_future<SessionPtr> future;
  std::optional<std::promise<SessionPtr>> promise;
  {
    std::lock_guard lock(mutex_);
    if (auto it = in_flight_.find(id); it != in_flight_.end()) {
      future = it->second;
    } else {
      promise.emplace();
      future = promise->get_future().share();
      in_flight_[id] = future;
      ++builds_started_;
    }
  }
  if (promise) {
    try {
      auto session = build(id, *tree, bc);
      insert(session);
      promise->set_value(session);
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
    std::lock_guard lock(mutex_);
    in_flight_.erase(id);
  }

  try {
    auto session = future.get();
    return reply(promise ? 201 : 200, summary_json(*session, promise.has_value()));
  } catch (const ConvergenceError& e) {
    return error_reply(500, "anchor_nonconvergence", e.what(), {{"configuration", e.label()}});
  } catch (const std::exception& e) {
    return error_reply(500, "build_failed", e.what());
  }
}

ServiceResponse PlannerService::list_lesions(const std::string& model_id) {
  const auto s = find(model_id);
  if (!s) return error_reply(404, "unknown_model", "no model with id '" + model_id + "'");
  json lesions = json::array();
  for (std::size_t i = 0; i < s->lesions.size(); ++i) {
    const auto& l = s->lesions[i];
    lesions.push_back({{"index", i},
                       {"path_id", l.path_id},
                       {"arc_start", l.arc_start},
                       {"arc_end", l.arc_end},
                       {"max_narrowing", l.max_narrowing},
                       {"kind", lesion_kind_name(l.kind)},
                       {"point_ids", l.member_point_ids},
                       {"suggested_plan", plan_json(full_idealization_plan(s->surface.patient, l))}});
  }
  return reply(200, {{"model_id", model_id}, {"lesions", lesions}});
}

ServiceResponse PlannerService::evaluate_plan(const std::string& model_id, const std::string& body) {
  const auto s = find(model_id);
  if (!s) return error_reply(404, "unknown_model", "no model with id '" + model_id + "'");
  const auto& patient = s->surface.patient;

  ModificationPlan plan;
  std::vector<std::size_t> paths;
  bool superemia = false;
  try {
    const auto doc = json::parse(body.empty() ? std::string("{}") : body);
    plan.blend_length = doc.value("blend_length", 0.2);
    for (const auto& iv : doc.value("intervals", json::array())) {
      PlanInterval p;
      p.path_id = iv.at("path_id").get<std::size_t>();
      p.arc_start = iv.at("arc_start").get<double>();
      p.arc_end = iv.at("arc_end").get<double>();
      p.target_fraction = iv.value("target_fraction", 1.0);
      plan.intervals.push_back(p);
    }
    if (doc.contains("paths")) {
      for (const auto& p : doc["paths"]) paths.push_back(p.get<std::size_t>());
    } else {
      for (std::size_t p = 0; p < s->paths.size(); ++p) paths.push_back(p);
    }
    const auto state = doc.value("state", std::string("hyperemia"));
    if (state != "hyperemia" && state != "superemia")
      return error_reply(400, "invalid_plan", "state must be hyperemia or superemia");
    superemia = state == "superemia";
  } catch (const json::exception& e) {
    return error_reply(400, "invalid_plan", e.what());
  }
  for (std::size_t p : paths)
    if (p >= s->paths.size()) return error_reply(400, "invalid_plan", "unknown path " + std::to_string(p));
  for (std::size_t i = 0; i < plan.intervals.size(); ++i) {
    const auto& iv = plan.intervals[i];
    if (!(iv.target_fraction >= 0.0 && iv.target_fraction <= 1.0))
      return error_reply(422, "envelope",
                         "interval " + std::to_string(i) + " targets a radius outside [patient, ideal]",
                         {{"interval", i}, {"offending", plan_json({{iv}, plan.blend_length})["intervals"][0]}});
  }

  std::optional<ModifiedGeometry> modified;
  try {
    modified.emplace(apply_modification(patient, s->ideal.radius_ideal, plan));
  } catch (const EnvelopeError& e) {
    return error_reply(422, "envelope", e.what());
  } catch (const Error& e) {
    return error_reply(400, "invalid_plan", e.what());
  }

  const auto bc = superemia ? s->surface.bc_hyperemia.with_scaled_outlets(kSuperemiaResistanceFactor)
                            : s->surface.bc_hyperemia;
  const auto& pre = s->surface.anchors[superemia ? AnchorConfig::PatientSuperemia : AnchorConfig::PatientHyperemia];
  const auto t0 = std::chrono::steady_clock::now();
  HemodynamicSolution post;
  try {
    post = solve(s->surface, modified->tree, modified->modified_edges, config_.solver, bc);
  } catch (const EnvelopeError& e) {
    return error_reply(422, "envelope", e.what());
  }
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json points = json::array();
  for (PointId id : select_evaluation_points(modified->tree, modified->modified_edges, config_.evaluation))
    points.push_back({{"id", id}, {"arc_length", patient.arc_length(id)}, {"ffr_pre", pre.ffr[id]},
                      {"ffr_post", post.ffr[id]}});
  json traces = json::array();
  for (std::size_t p : paths) traces.push_back(trace_json(p, s->paths[p], patient, pre.ffr, &post.ffr));

  return reply(200, {{"model_id", model_id},
                     {"state", superemia ? "superemia" : "hyperemia"},
                     {"converged", post.converged},
                     {"iterations", post.iterations},
                     {"ostial_flow_pre", pre.ostial_flow},
                     {"ostial_flow_post", post.ostial_flow},
                     {"modified_edges", modified->modified_edges.size()},
                     {"evaluation_points", points},
                     {"traces", traces},
                     {"timing", {{"psrom_runtime_s", runtime}}}});
}

ServiceResponse PlannerService::traces(const std::string& model_id, std::optional<std::string> path) {
  const auto s = find(model_id);
  if (!s) return error_reply(404, "unknown_model", "no model with id '" + model_id + "'");
  const auto& anchor = s->surface.anchors[AnchorConfig::PatientHyperemia];
  json out = json::array();
  if (path) {
    std::size_t p = 0;
    try {
      std::size_t used = 0;
      p = std::stoull(*path, &used);
      if (used != path->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      return error_reply(400, "invalid_path", "path must be a non-negative integer");
    }
    if (p >= s->paths.size()) return error_reply(404, "unknown_path", "no path " + *path);
    out.push_back(trace_json(p, s->paths[p], s->surface.patient, anchor.ffr, nullptr));
  } else {
    for (std::size_t p = 0; p < s->paths.size(); ++p)
      out.push_back(trace_json(p, s->paths[p], s->surface.patient, anchor.ffr, nullptr));
  }
  return reply(200, {{"model_id", model_id}, {"traces", out}});
}

ServiceResponse PlannerService::delete_model(const std::string& model_id) {
  bool found = false;
  {
    std::lock_guard lock(mutex_);
    if (auto it = sessions_.find(model_id); it != sessions_.end()) {
      lru_.erase(it->second.position);
      sessions_.erase(it);
      found = true;
    }
  }
  if (!config_.store_dir.empty() && model_id.find_first_not_of("0123456789abcdef") == std::string::npos) {
    std::error_code ec;
    found = std::filesystem::remove(store_path(model_id), ec) || found;
  }
  if (!found) return error_reply(404, "unknown_model", "no model with id '" + model_id + "'");
  return reply(200, {{"model_id", model_id}, {"deleted", true}});
}

}  // namespace psrom
