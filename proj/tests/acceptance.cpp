// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "psrom/ideal_geometry.hpp"
#include "psrom/intervention.hpp"
#include "psrom/predictor_corrector.hpp"
#include "psrom/response_surface.hpp"
#include "psrom/stats.hpp"
#include "psrom/synthetic.hpp"
#include "psrom/validation.hpp"

using namespace psrom;
using namespace psrom::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* name, const Outcome& o) {
  std::printf("criterion %d %-28s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

SolverConfig fixed_outlets() {
  SolverConfig c;
  c.bc_scaling_enabled = false;
  return c;
}

ResponseSurface surface_for(const CenterlineTree& patient, const BoundaryConditionSet& bc) {
  const auto fit = fit_ideal({patient, std::nullopt, std::nullopt});
  return build_response_surface(patient, patient.with_radii(fit.radius_ideal), bc);
}

Outcome anchor_exactness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = generate_synthetic_patient(seed);
    const auto s = surface_for(p.tree, p.bc);
    const auto edges = changed_edges(s.patient, s.ideal);
    const auto sup = p.bc.with_scaled_outlets(kSuperemiaResistanceFactor);
    for (auto c : kAnchorConfigs) {
      const bool ideal = c == AnchorConfig::IdealHyperemia || c == AnchorConfig::IdealSuperemia;
      const bool super = c == AnchorConfig::PatientSuperemia || c == AnchorConfig::IdealSuperemia;
      const auto sol = solve(s, ideal ? s.ideal : s.patient, ideal ? edges : std::set<PointId>{}, fixed_outlets(),
                             super ? sup : p.bc);
      for (PointId i = 0; i < p.tree.size(); ++i) {
        const double d = std::abs(sol.ffr[i] - s.anchors[c].ffr[i]);
        if (d > worst) {
          worst = d;
          where = fmt("seed %llu %s", static_cast<unsigned long long>(seed), anchor_label(c));
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 0.005 && t < 120.0,
          fmt("max |dFFR| %.2e (%s), tol 5e-3; %.1f s, limit 120 s", worst, where.c_str(), t)};
}

Outcome equivalence(const std::vector<ComparisonRecord>& records, double seconds, std::size_t dropped) {
  const auto s = compute_stats(records, Stratifier::None).at(0);
  const bool pass = s.n >= 2 && std::abs(s.bias) <= kEquivalenceMargin && s.sd <= kSdMargin && s.tost_p < 0.05 &&
                    s.chisq_p < 0.05 && s.pearson_r >= 0.98 && seconds < 600.0;
  return {pass, fmt("n %zu (dropped cases %zu), bias %.2e, sd %.2e, tost p %.1e, chisq p %.1e, r %.5f; %.1f s",
                    s.n, dropped, s.bias, s.sd, s.tost_p, s.chisq_p, s.pearson_r, seconds)};
}

Outcome stratified(const std::vector<ComparisonRecord>& records, const fs::path& dir) {
  export_report(dir.string(), records, {Stratifier::LesionKind, Stratifier::FfrRange});
  const auto summary = slurp(dir / "summary.csv");
  bool pass = true;
  std::string problems;

  const char* kinds[] = {"focal", "ostial", "bifurcation", "serial"};
  std::size_t rows = 0;
  for (Stratifier st : {Stratifier::LesionKind, Stratifier::FfrRange}) {
    std::vector<std::string> notes;
    for (const auto& s : compute_stats(records, st, &notes)) {
      ++rows;
      const std::string row = std::string(stratifier_name(st)) + ",\"" + s.stratum + "\"," + std::to_string(s.n) + ",";
      if (summary.find(row) == std::string::npos) {
        pass = false;
        problems += " missing row " + row;
      }
      if (!s.within_margins()) {
        pass = false;
        problems += " " + s.stratum + " outside margins";
      }
    }
  }
  // strata with a single comparison are reported as notes; hold them to the bias margin
  std::size_t singles = 0;
  std::map<std::string, std::vector<double>> by_stratum;
  for (const auto& r : records) {
    by_stratum[std::string("lesion:") + lesion_kind_name(r.kind)].push_back(r.delta);
    by_stratum["ffr:" + ffr_bucket_label(ffr_bucket(r.ffr_psrom))].push_back(r.delta);
  }
  for (const auto& [k, d] : by_stratum)
    if (d.size() == 1) {
      ++singles;
      if (std::abs(d[0]) > kEquivalenceMargin) {
        pass = false;
        problems += " " + k + " single delta outside margin";
      }
    }
  for (const char* k : kinds)
    if (!by_stratum.count(std::string("lesion:") + k)) problems += std::string(" (no ") + k + " comparisons)";
  const std::string expected_edges = "[0.00,0.70) [0.70,0.75) [0.75,0.80) [0.80,0.85) [0.85,0.90) [0.90,1.00]";
  std::string edges;
  for (std::size_t b = 0; b + 1 < std::size(kFfrBucketEdges); ++b) edges += (b ? " " : "") + ffr_bucket_label(b);
  if (edges != expected_edges) {
    pass = false;
    problems += " bucket edges " + edges;
  }
  double worst_bias = 0.0, worst_sd = 0.0;
  for (Stratifier st : {Stratifier::LesionKind, Stratifier::FfrRange})
    for (const auto& s : compute_stats(records, st)) {
      worst_bias = std::max(worst_bias, std::abs(s.bias));
      worst_sd = std::max(worst_sd, s.sd);
    }
  return {pass, fmt("%zu stratum rows + %zu single-record strata; worst |bias| %.2e, worst sd %.2e%s", rows, singles,
                    worst_bias, worst_sd, problems.c_str())};
}

Outcome ideal_fit() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  std::uniform_int_distribution<std::size_t> size(1, 8), nvals(1, 10);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> values(nvals(rng));
    for (auto& v : values) v = u(rng);
    const auto n = std::max<std::size_t>(2, size(rng));
    const auto tree = random_tree(rng, n, values);
    const IdealFitProblem problem{tree, std::nullopt, std::nullopt};
    worst = std::max(worst, std::abs(fit_ideal(problem).objective_value - brute_force_ideal(problem).objective_value));
  }
  std::size_t violations = 0, trees = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values(50);
    for (auto& v : values) v = u(rng);
    const auto tree = random_tree(rng, 1000, values);
    const auto fit = fit_ideal({tree});
    ++trees;
    for (PointId i = 1; i < tree.size(); ++i)
      if (fit.radius_ideal[i] > fit.radius_ideal[tree.parent(i)] + 1e-9) ++violations;
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = generate_sized_patient(seed, 1000);
    const auto fit = fit_ideal({p.tree});
    ++trees;
    for (PointId i = 1; i < p.tree.size(); ++i)
      if (fit.radius_ideal[i] > fit.radius_ideal[p.tree.parent(i)] + 1e-9) ++violations;
  }
  return {worst <= 1e-9 && violations == 0,
          fmt("max objective gap %.1e over 100 small trees (tol 1e-9); %zu monotonicity violations on %zu "
              "1000-point trees",
              worst, violations, trees)};
}

Outcome interpolants() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> radius(0.05, 0.25), growth(0.01, 1.0), length(0.02, 0.5), t(0.0, 1.0);
  double alpha_err = 0.0, beta_err = 0.0, form_err = 0.0;
  std::size_t both = 0, beta_defined = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const double ro = radius(rng), ri = ro * (1.0 + growth(rng));
    alpha_err = std::max({alpha_err, std::abs(alpha(ro, ro, ri) - 1.0), std::abs(alpha(ri, ro, ri))});

    const double len = length(rng);
    const double rpo = radius(rng), rdo = radius(rng);
    const double rpi = rpo * (1.0 + growth(rng)), rdi = rdo * (1.0 + growth(rng));
    const auto orig = make_segment(0, 1, len, rpo, rdo);
    const auto ideal = make_segment(0, 1, len, rpi, rdi);
    const auto bo = beta(inertial_area(orig), orig.area_gradient, orig, ideal);
    const auto bi = beta(inertial_area(ideal), ideal.area_gradient, orig, ideal);
    if (bo && bi) {
      ++beta_defined;
      beta_err = std::max({beta_err, std::abs(*bo - 1.0), std::abs(*bi)});
    }
    const double w = t(rng);
    const auto mid = make_segment(0, 1, len, rpo + w * (rpi - rpo), rdo + w * (rdi - rdo));
    const auto simple = beta(inertial_area(mid), mid.area_gradient, orig, ideal);
    const auto printed = beta_displayed_form(inertial_area(mid), mid.area_gradient, orig, ideal);
    if (simple && printed) {
      ++both;
      form_err = std::max(form_err, std::abs(*simple - *printed));
    }
  }
  return {alpha_err <= 1e-12 && beta_err <= 1e-12 && form_err <= 1e-10,
          fmt("alpha endpoint err %.1e, beta endpoint err %.1e (%zu defined), printed vs simplified %.1e (%zu "
              "defined)",
              alpha_err, beta_err, beta_defined, form_err, both)};
}

Outcome closed_form() {
  const auto f = closed_form_tube();
  const double q = quadratic_flow(f.a, f.b, f.outlet_resistance, f.aortic_pressure);
  const double ffr = f.outlet_resistance * q / f.aortic_pressure;
  const auto oracle = solve_steady(f.tree, f.bc);
  const auto s = surface_for(f.tree, f.bc);
  const auto rom = solve(s, s.patient, {}, fixed_outlets());
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  const double worst = std::max({rel(oracle.ostial_flow, 1.2074), rel(rom.ostial_flow, 1.2074),
                                 rel(oracle.ffr[1], 0.9057), rel(rom.ffr[1], 0.9057)});
  const double exact = std::max({rel(oracle.ostial_flow, q), rel(rom.ostial_flow, q), rel(oracle.ffr[1], ffr),
                                 rel(rom.ffr[1], ffr)});
  return {worst <= 1e-3 && exact <= 1e-3,
          fmt("Q oracle %.5f rom %.5f, FFR oracle %.5f rom %.5f (root %.5f, %.5f); max rel err %.1e", oracle.ostial_flow,
              rom.ostial_flow, oracle.ffr[1], rom.ffr[1], q, ffr, std::max(worst, exact))};
}

Outcome silent_lesion() {
  const auto f = serial_lesion_fixture();
  const auto fit = fit_ideal({f.tree, std::nullopt, std::nullopt});
  const auto s = build_response_surface(f.tree, f.tree.with_radii(fit.radius_ideal), f.bc);
  auto lesions = detect_lesions(f.tree, fit);
  if (lesions.size() != 2) return {false, fmt("fixture has %zu lesions, expected 2", lesions.size())};
  const auto severe_it = std::max_element(lesions.begin(), lesions.end(), [](const auto& a, const auto& b) {
    return a.max_narrowing < b.max_narrowing;
  });
  const auto& severe = *severe_it;
  const auto& mild = lesions[severe_it == lesions.begin() ? 1 : 0];

  const auto m = apply_modification(f.tree, fit.radius_ideal, full_idealization_plan(f.tree, severe));
  for (PointId id : mild.member_point_ids)
    if (m.tree.radius(id) != f.tree.radius(id)) return {false, "treatment touched the tandem lesion"};

  const PointId above = f.tree.parent(mild.member_point_ids.front());
  const PointId below = mild.member_point_ids.back() + 1;
  const auto& pre_oracle = s.anchors[AnchorConfig::PatientHyperemia];
  const auto post_oracle = solve_steady(m.tree, f.bc);
  const auto pre_rom = solve(s, s.patient, {}, fixed_outlets());
  const auto post_rom = solve(s, m.tree, m.modified_edges, fixed_outlets());
  auto drop = [&](const HemodynamicSolution& sol) { return sol.pressures[above] - sol.pressures[below]; };

  const double d_oracle_pre = drop(pre_oracle) / kMmHg, d_oracle_post = drop(post_oracle) / kMmHg;
  const double d_rom_pre = drop(pre_rom) / kMmHg, d_rom_post = drop(post_rom) / kMmHg;
  const double gap = std::abs(post_rom.ffr[below] - post_oracle.ffr[below]);
  return {d_oracle_post > d_oracle_pre && d_rom_post > d_rom_pre && gap <= 0.02,
          fmt("tandem drop mmHg oracle %.2f -> %.2f, rom %.2f -> %.2f; distal FFR oracle %.4f rom %.4f, "
              "|diff| %.1e (tol 0.02)",
              d_oracle_pre, d_oracle_post, d_rom_pre, d_rom_post, post_oracle.ffr[below], post_rom.ffr[below], gap)};
}

Outcome latency(const fs::path& dir) {
  const auto p = generate_sized_patient(1, 5000);
  const auto r = run_latency_benchmark(p.tree, p.bc, 100);
  fs::create_directories(dir);
  std::ofstream(dir / "latency_histogram.csv") << histogram_csv(runtime_histogram(r.seconds, 1.0));
  return {r.median < 0.050 && r.p99 < 0.250,
          fmt("%zu points, 100 runs: median %.2f ms, p99 %.2f ms (limits 50 / 250 ms); histogram in %s", r.points,
              r.median * 1e3, r.p99 * 1e3, (dir / "latency_histogram.csv").c_str())};
}

Outcome determinism(const std::vector<ComparisonRecord>& first, const fs::path& dir) {
  ValidationConfig config;
  const auto second = collect_records(run_validation_batch(1, 200, {}, config, 2));
  const std::vector<Stratifier> all = {Stratifier::None, Stratifier::LesionKind, Stratifier::FfrRange};
  export_report((dir / "a").string(), first, all);
  export_report((dir / "b").string(), second, all);
  bool pass = true;
  std::string detail;
  for (const char* f : {"records.csv", "summary.csv"}) {
    const auto a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    const bool same = !a.empty() && a == b;
    pass = pass && same;
    detail += fmt("%s %s (%zu bytes); ", f, same ? "identical" : "DIFFERS", a.size());
  }
  return {pass, detail + "1 vs 2 worker threads"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "psrom-acceptance";
  fs::remove_all(out);
  fs::create_directories(out);

  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "anchor exactness", guarded(anchor_exactness));

  std::vector<ComparisonRecord> records;
  double batch_seconds = 0.0;
  std::size_t dropped = 0;
  try {
    const auto t0 = Clock::now();
    const auto results = run_validation_batch(1, 200, {}, {}, 1);
    batch_seconds = seconds_since(t0);
    for (const auto& r : results) dropped += r.dropped;
    records = collect_records(results);
  } catch (const std::exception& e) {
    std::printf("batch failed: %s\n", e.what());
  }
  report(2, "desk-scale equivalence", guarded([&] { return equivalence(records, batch_seconds, dropped); }));
  report(3, "stratified reporting", guarded([&] { return stratified(records, out / "report"); }));
  report(4, "ideal-fit optimality", guarded(ideal_fit));
  report(5, "interpolant identities", guarded(interpolants));
  report(6, "closed-form solve", guarded(closed_form));
  report(7, "silent-lesion behaviour", guarded(silent_lesion));
  report(8, "latency", guarded([&] { return latency(out); }));
  report(9, "determinism", guarded([&] { return determinism(records, out / "determinism"); }));

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
