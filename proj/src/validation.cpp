#include "psrom/validation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "psrom/errors.hpp"
#include "psrom/ideal_geometry.hpp"
#include "psrom/response_surface.hpp"

namespace psrom {
namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Exact round trip, so summaries rebuilt from records.csv match.
std::string exact(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CaseResult run_validation_case(std::uint64_t case_id, const CenterlineTree& patient,
                               const BoundaryConditionSet& bc, const ValidationConfig& config) {
  CaseResult result;
  result.case_id = case_id;
  const std::string tag = "case " + std::to_string(case_id) + ": ";

  const auto ideal = fit_ideal({patient, std::nullopt, std::nullopt});
  const auto ideal_tree = patient.with_radii(ideal.radius_ideal, patient.name() + "-ideal");

  std::optional<ResponseSurface> surface;
  try {
    surface.emplace(build_response_surface(patient, ideal_tree, bc, config.oracle));
  } catch (const ConvergenceError& e) {
    result.dropped = true;
    result.log.push_back(tag + "dropped, oracle did not converge for " + e.label());
    return result;
  }

  auto lesions = detect_lesions(patient, ideal, config.lesions);
  classify_lesions(patient, lesions, config.lesions);
  result.lesion_count = lesions.size();

  const auto& pre = surface->anchors[AnchorConfig::PatientHyperemia];
  OracleOptions oracle = config.oracle;
  if (config.solver.bc_scaling_enabled) {
    for (PointId id : patient.outlets()) oracle.adaptive_outlet_reference_pressures[id] = pre.pressures[id];
  }

  for (std::size_t li = 0; li < lesions.size(); ++li) {
    const auto plan = full_idealization_plan(patient, lesions[li], 1.0, config.blend_length);
    const auto modified = apply_modification(patient, ideal.radius_ideal, plan);
    if (modified.modified_edges.empty()) continue;
    const auto points = select_evaluation_points(modified.tree, modified.modified_edges, config.evaluation);
    if (points.empty()) {
      result.log.push_back(tag + "lesion " + std::to_string(li) + " has no evaluation point");
      continue;
    }
    const auto truth = solve_steady(modified.tree, bc, oracle);
    if (!truth.converged) {
      result.log.push_back(tag + "lesion " + std::to_string(li) + " dropped, oracle did not converge");
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto rom = solve(*surface, modified.tree, modified.modified_edges, config.solver);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!rom.converged) result.log.push_back(tag + "lesion " + std::to_string(li) + " ROM hit the iteration cap");

    for (PointId p : points) {
      ComparisonRecord r;
      r.case_id = case_id;
      r.kind = lesions[li].kind;
      r.lesion_index = li;
      r.point = p;
      r.ffr_oracle = truth.ffr[p];
      r.ffr_psrom = rom.ffr[p];
      r.delta = r.ffr_psrom - r.ffr_oracle;
      r.ffr_pre = pre.ffr[p];
      r.psrom_runtime = runtime;
      r.flagged = r.ffr_oracle > 1.0 || r.ffr_psrom > 1.0;
      result.records.push_back(r);
    }
  }
  return result;
}

std::vector<CaseResult> run_validation_batch(std::uint64_t seed, std::size_t cases,
                                             const SyntheticConfig& generator,
                                             const ValidationConfig& config, unsigned threads) {
  std::vector<CaseResult> results(cases);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cases;) {
      const auto patient = generate_synthetic_patient(seed + i, generator);
      results[i] = run_validation_case(seed + i, patient.tree, patient.bc, config);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

std::vector<ComparisonRecord> collect_records(const std::vector<CaseResult>& results) {
  std::vector<ComparisonRecord> out;
  for (const auto& r : results) out.insert(out.end(), r.records.begin(), r.records.end());
  return out;
}

std::vector<RuntimeBin> runtime_histogram(const std::vector<ComparisonRecord>& records, double bin_width_ms) {
  std::vector<double> seconds;
  seconds.reserve(records.size());
  for (const auto& r : records) seconds.push_back(r.psrom_runtime);
  return runtime_histogram(seconds, bin_width_ms);
}

std::vector<RuntimeBin> runtime_histogram(const std::vector<double>& seconds, double bin_width_ms) {
  if (!(bin_width_ms > 0.0)) throw Error("bin width must be positive");
  std::vector<RuntimeBin> bins;
  for (double sec : seconds) {
    const auto k = static_cast<std::size_t>(std::floor(sec * 1e3 / bin_width_ms));
    while (bins.size() <= k) {
      const double lo = static_cast<double>(bins.size()) * bin_width_ms;
      bins.push_back({lo, lo + bin_width_ms, 0});
    }
    ++bins[k].count;
  }
  return bins;
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw Error("percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double rank = std::ceil(q * static_cast<double>(samples.size()));
  const auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(samples.size())));
  return samples[k - 1];
}

LatencyResult run_latency_benchmark(const CenterlineTree& patient, const BoundaryConditionSet& bc,
                                    std::size_t runs, const SolverConfig& solver) {
  const auto ideal = fit_ideal({patient, std::nullopt, std::nullopt});
  const auto ideal_tree = patient.with_radii(ideal.radius_ideal);
  const auto surface = build_response_surface(patient, ideal_tree, bc);
  auto lesions = detect_lesions(patient, ideal);

  ModificationPlan plan;
  for (const auto& l : lesions) {
    const auto p = full_idealization_plan(patient, l);
    plan.intervals.insert(plan.intervals.end(), p.intervals.begin(), p.intervals.end());
  }
  std::optional<ModifiedGeometry> modified;
  try {
    modified.emplace(apply_modification(patient, ideal.radius_ideal, plan));
  } catch (const Error&) {
    // Overlapping padded intervals from neighbouring lesions: treat the tree whole.
    modified.emplace(ModifiedGeometry{ideal_tree, changed_edges(patient, ideal_tree)});
  }
  if (lesions.empty()) modified.emplace(ModifiedGeometry{ideal_tree, changed_edges(patient, ideal_tree)});

  LatencyResult out;
  out.points = patient.size();
  for (std::size_t r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve(surface, modified->tree, modified->modified_edges, solver);
    out.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (sol.ffr.empty()) throw Error("empty solution");
  }
  if (!out.seconds.empty()) {
    out.median = percentile(out.seconds, 0.5);
    out.p99 = percentile(out.seconds, 0.99);
  }
  return out;
}

std::string records_csv(const std::vector<ComparisonRecord>& records) {
  std::ostringstream out;
  out << kGroundTruthNote << '\n';
  out << "case_id,lesion_index,kind,point,ffr_pre,ffr_oracle,ffr_psrom,delta,flagged\n";
  for (const auto& r : records)
    out << r.case_id << ',' << r.lesion_index << ',' << lesion_kind_name(r.kind) << ',' << r.point << ','
        << exact(r.ffr_pre) << ',' << exact(r.ffr_oracle) << ',' << exact(r.ffr_psrom) << ',' << exact(r.delta) << ','
        << (r.flagged ? 1 : 0) << '\n';
  return out.str();
}

std::vector<ComparisonRecord> parse_records_csv(const std::string& text) {
  std::vector<ComparisonRecord> out;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("case_id,", 0) != 0) throw Error("records table lacks its header row");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw Error("records line " + std::to_string(line_no) + " has " +
                                   std::to_string(f.size()) + " fields, expected 9");
    try {
      ComparisonRecord r;
      r.case_id = std::stoull(f[0]);
      r.lesion_index = std::stoull(f[1]);
      r.kind = parse_lesion_kind(f[2]);
      r.point = std::stoull(f[3]);
      r.ffr_pre = std::stod(f[4]);
      r.ffr_oracle = std::stod(f[5]);
      r.ffr_psrom = std::stod(f[6]);
      r.delta = std::stod(f[7]);
      r.flagged = f[8] == "1";
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error("records line " + std::to_string(line_no) + " is malformed");
    }
  }
  return out;
}

std::string summary_csv(const std::vector<std::pair<Stratifier, std::vector<StatsSummary>>>& tables,
                        const std::vector<std::string>& notes) {
  std::ostringstream out;
  out << kGroundTruthNote << '\n';
  for (const auto& n : notes) out << "# " << n << '\n';
  out << "stratifier,stratum,n,bias,sd,bias_ci_lo,bias_ci_hi,pearson_r,pearson_ci_lo,pearson_ci_hi,"
         "loa_lo,loa_hi,tost_p,chisq_p,slope,intercept\n";
  for (const auto& [strat, rows] : tables)
    for (const auto& s : rows)
      out << stratifier_name(strat) << ",\"" << s.stratum << "\"," << s.n << ',' << num(s.bias) << ','
          << num(s.sd) << ',' << num(s.bias_ci.lo) << ',' << num(s.bias_ci.hi) << ',' << num(s.pearson_r)
          << ',' << num(s.pearson_ci.lo) << ',' << num(s.pearson_ci.hi) << ',' << num(s.limits.lo) << ','
          << num(s.limits.hi) << ',' << num(s.tost_p) << ',' << num(s.chisq_p) << ',' << num(s.slope) << ','
          << num(s.intercept) << '\n';
  return out.str();
}

std::string timing_csv(const std::vector<ComparisonRecord>& records) {
  std::ostringstream out;
  out << "case_id,lesion_index,point,psrom_runtime_s\n";
  for (const auto& r : records)
    out << r.case_id << ',' << r.lesion_index << ',' << r.point << ',' << num(r.psrom_runtime) << '\n';
  return out.str();
}

std::string histogram_csv(const std::vector<RuntimeBin>& bins) {
  std::ostringstream out;
  out << "bin_lo_ms,bin_hi_ms,count\n";
  for (const auto& b : bins) out << num(b.lo_ms) << ',' << num(b.hi_ms) << ',' << b.count << '\n';
  return out.str();
}

void export_report(const std::string& directory, const std::vector<ComparisonRecord>& records,
                   const std::vector<Stratifier>& stratifiers, const std::vector<std::string>& extra_notes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error("cannot create report directory " + directory + ": " + ec.message());

  std::vector<std::string> notes = extra_notes;
  std::vector<std::pair<Stratifier, std::vector<StatsSummary>>> tables;
  std::vector<Stratifier> order{Stratifier::None};
  for (auto s : stratifiers)
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  for (auto s : order) {
    std::vector<std::string> local;
    tables.emplace_back(s, compute_stats(records, s, &local));
    for (auto& n : local) notes.push_back(std::string(stratifier_name(s)) + ": " + n);
  }

  auto write = [&](const std::string& name, const std::string& body) {
    const auto path = fs::path(directory) / name;
    std::ofstream f(path, std::ios::binary);
    f << body;
    f.close();
    if (!f) throw Error("failed to write " + path.string());
  };
  write("records.csv", records_csv(records));
  write("summary.csv", summary_csv(tables, notes));
  write("timing.csv", timing_csv(records));
  write("runtime_histogram.csv", histogram_csv(runtime_histogram(records)));
}

}  // namespace psrom
