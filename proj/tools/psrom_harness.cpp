// psrom-harness: synthetic cohorts, batch validation against the oracle,
// statistics and single-model utilities.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "psrom/errors.hpp"
#include "psrom/ideal_geometry.hpp"
#include "psrom/intervention.hpp"
#include "psrom/predictor_corrector.hpp"
#include "psrom/response_surface.hpp"
#include "psrom/stats.hpp"
#include "psrom/synthetic.hpp"
#include "psrom/validation.hpp"

namespace fs = std::filesystem;
using namespace psrom;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  out.close();
  if (!out) throw Error("failed to write " + path.string());
}

std::vector<Stratifier> stratifiers_for(const std::string& name) {
  if (name == "all") return {Stratifier::None, Stratifier::LesionKind, Stratifier::FfrRange};
  return {parse_stratifier(name)};
}

void print_summaries(const std::vector<ComparisonRecord>& records, const std::vector<Stratifier>& strats) {
  std::vector<std::pair<Stratifier, std::vector<StatsSummary>>> tables;
  std::vector<std::string> notes;
  for (auto s : strats) {
    std::vector<std::string> local;
    tables.emplace_back(s, compute_stats(records, s, &local));
    for (auto& n : local) notes.push_back(std::string(stratifier_name(s)) + ": " + n);
  }
  std::cout << summary_csv(tables, notes);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order FFR model: synthetic validation harness"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::size_t cases = 200;
  std::string out_dir = "psrom-out";
  std::string stratify = "all";
  double kappa = kDefaultRecoveryEfficiency;
  double tol2 = 0.02;
  bool bc_scaling = false;
  unsigned threads = 1;

  auto* gen = app.add_subcommand("generate", "Write a seeded synthetic cohort as tree documents");
  gen->add_option("--seed", seed, "Base seed; case i uses seed + i");
  gen->add_option("--cases", cases, "Number of patients")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_dir, "Output directory");

  auto* run = app.add_subcommand("run", "Generate, validate against the oracle and write reports");
  run->add_option("--seed", seed, "Base seed; case i uses seed + i");
  run->add_option("--cases", cases, "Number of patients")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Report directory");
  run->add_option("--stratify", stratify, "none, lesion, ffr or all")
      ->check(CLI::IsMember({"none", "lesion", "ffr", "all"}));
  run->add_option("--oracle-kappa", kappa, "Oracle expansion recovery efficiency")->check(CLI::Range(0.0, 1.0));
  run->add_option("--tol2", tol2, "ROM ostial-flow convergence tolerance");
  run->add_flag("--bc-scaling", bc_scaling, "Enable pressure-ratio outlet scaling in ROM and oracle");
  run->add_option("--threads", threads, "Worker threads (reports are identical for any count)");

  std::string records_in;
  auto* stats = app.add_subcommand("stats", "Print summary statistics for a records table");
  stats->add_option("--in", records_in, "records.csv")->required();
  stats->add_option("--stratify", stratify, "none, lesion, ffr or all")
      ->check(CLI::IsMember({"none", "lesion", "ffr", "all"}));

  auto* report = app.add_subcommand("report", "Rebuild summary.csv from a records table");
  report->add_option("--in", records_in, "records.csv")->required();
  report->add_option("--out", out_dir, "Report directory");
  report->add_option("--stratify", stratify, "none, lesion, ffr or all")
      ->check(CLI::IsMember({"none", "lesion", "ffr", "all"}));

  std::string tree_in, surface_in, plan_in, modified_in, out_file;
  std::vector<PointId> edges_in;
  auto* fit = app.add_subcommand("fit-ideal", "Fit the monotone ideal profile of a tree");
  fit->add_option("--tree,--in", tree_in, "Tree document")->required();
  fit->add_option("--out", out_file, "Write the ideal tree document here (default stdout)");

  auto* build = app.add_subcommand("build-surface", "Run the four anchors and save the response surface");
  build->add_option("--tree", tree_in, "Tree document")->required();
  build->add_option("--out", out_file, "Surface document")->required();
  build->add_option("--oracle-kappa", kappa, "Oracle expansion recovery efficiency")->check(CLI::Range(0.0, 1.0));

  auto* solve_cmd = app.add_subcommand("solve", "Solve a modification plan on a saved surface");
  solve_cmd->add_option("--surface", surface_in, "Surface document")->required();
  solve_cmd->add_option("--plan", plan_in, "Plan JSON {intervals:[...], blend_length} (default: none)");
  solve_cmd->add_option("--modified", modified_in, "Modified tree document (instead of --plan)")->excludes("--plan");
  solve_cmd->add_option("--edges", edges_in, "Modified edge ids for --modified (default: radii that differ)")
      ->needs("--modified");
  solve_cmd->add_option("--tol2", tol2, "ROM ostial-flow convergence tolerance");

  std::size_t points = 5000, runs = 100;
  auto* bench = app.add_subcommand("bench", "Predict-step latency on a large synthetic tree");
  bench->add_option("--seed", seed, "Generator seed");
  bench->add_option("--points", points, "Approximate tree size")->check(CLI::PositiveNumber);
  bench->add_option("--runs", runs, "Timed solves")->check(CLI::PositiveNumber);
  bench->add_option("--out", out_dir, "Directory for latency.csv and latency_histogram.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const fs::path dir(out_dir);
      fs::create_directories(dir / "cases");
      std::ostringstream labels;
      labels << "case_id,points,lesion,kind,center,narrowing,length\n";
      for (std::size_t i = 0; i < cases; ++i) {
        const auto p = generate_synthetic_patient(seed + i);
        char name[32];
        std::snprintf(name, sizeof name, "case-%06llu.json", static_cast<unsigned long long>(seed + i));
        write_file(dir / "cases" / name, save_tree(p.tree) + "\n");
        for (std::size_t k = 0; k < p.labels.size(); ++k) {
          const auto& l = p.labels[k];
          labels << p.seed << ',' << p.tree.size() << ',' << k << ',' << lesion_kind_name(l.kind) << ','
                 << l.center << ',' << l.narrowing << ',' << l.length << '\n';
        }
      }
      write_file(dir / "labels.csv", labels.str());
      std::cout << "wrote " << cases << " trees to " << (dir / "cases").string() << "\n";
      return 0;
    }

    if (*run) {
      ValidationConfig config;
      config.oracle.recovery_efficiency = kappa;
      config.solver.tol2 = tol2;
      config.solver.bc_scaling_enabled = bc_scaling;
      config.solver.validate();
      const auto t0 = std::chrono::steady_clock::now();
      const auto results = run_validation_batch(seed, cases, SyntheticConfig{}, config, threads);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto records = collect_records(results);

      std::vector<std::string> notes;
      std::size_t dropped = 0;
      std::ostringstream log;
      for (const auto& r : results) {
        dropped += r.dropped;
        for (const auto& line : r.log) log << line << '\n';
      }
      notes.push_back("cases " + std::to_string(cases) + ", seed " + std::to_string(seed) + ", dropped " +
                      std::to_string(dropped) + ", comparisons " + std::to_string(records.size()));
      export_report(out_dir, records, stratifiers_for(stratify), notes);
      write_file(fs::path(out_dir) / "log.txt", log.str());

      const auto overall = compute_stats(records, Stratifier::None);
      std::cout << "cases " << cases << ", comparisons " << records.size() << ", dropped " << dropped << ", "
                << elapsed << " s\n";
      if (!overall.empty()) {
        const auto& s = overall.front();
        std::cout << "bias " << s.bias << "  sd " << s.sd << "  r " << s.pearson_r << "  tost_p " << s.tost_p
                  << "  chisq_p " << s.chisq_p << "\n";
      }
      std::cout << "reports in " << out_dir << "\n";
      return 0;
    }

    if (*stats) {
      print_summaries(parse_records_csv(read_file(records_in)), stratifiers_for(stratify));
      return 0;
    }

    if (*report) {
      const auto records = parse_records_csv(read_file(records_in));
      std::vector<std::pair<Stratifier, std::vector<StatsSummary>>> tables;
      std::vector<std::string> notes;
      auto strats = stratifiers_for(stratify);
      if (std::find(strats.begin(), strats.end(), Stratifier::None) == strats.end())
        strats.insert(strats.begin(), Stratifier::None);
      for (auto s : strats) {
        std::vector<std::string> local;
        tables.emplace_back(s, compute_stats(records, s, &local));
        for (auto& n : local) notes.push_back(std::string(stratifier_name(s)) + ": " + n);
      }
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / "summary.csv", summary_csv(tables, notes));
      std::cout << "wrote " << (fs::path(out_dir) / "summary.csv").string() << "\n";
      return 0;
    }

    if (*fit) {
      const auto tree = load_tree_file(tree_in);
      const auto profile = fit_ideal({tree, std::nullopt, std::nullopt});
      const auto ideal = tree.with_radii(profile.radius_ideal, tree.name() + "-ideal");
      if (out_file.empty()) {
        std::cout << save_tree(ideal) << "\n";
      } else {
        save_tree_file(ideal, out_file);
      }
      std::cerr << "objective " << profile.objective_value << "\n";
      return 0;
    }

    if (*build) {
      const auto tree = load_tree_file(tree_in);
      const auto profile = fit_ideal({tree, std::nullopt, std::nullopt});
      const auto ideal = tree.with_radii(profile.radius_ideal, tree.name() + "-ideal");
      OracleOptions oracle;
      oracle.recovery_efficiency = kappa;
      const auto surface = build_response_surface(tree, ideal, default_boundary_conditions(tree), oracle);
      write_file(out_file, save_surface(surface));
      std::cout << "surface written to " << out_file << "\n";
      return 0;
    }

    if (*solve_cmd) {
      const auto surface = load_surface(read_file(surface_in));
      ModificationPlan plan;
      if (!plan_in.empty()) {
        const auto doc = nlohmann::json::parse(read_file(plan_in));
        plan.blend_length = doc.value("blend_length", 0.2);
        for (const auto& iv : doc.at("intervals"))
          plan.intervals.push_back({iv.at("path_id").get<std::size_t>(), iv.at("arc_start").get<double>(),
                                    iv.at("arc_end").get<double>(), iv.value("target_fraction", 1.0)});
      }
      ModifiedGeometry modified{surface.patient, {}};
      if (!modified_in.empty()) {
        modified.tree = load_tree_file(modified_in);
        modified.modified_edges = edges_in.empty() ? changed_edges(surface.patient, modified.tree)
                                                   : std::set<PointId>(edges_in.begin(), edges_in.end());
      } else {
        modified = apply_modification(surface.patient, surface.ideal.radii(), plan);
      }
      SolverConfig config;
      config.tol2 = tol2;
      const auto sol = solve(surface, modified.tree, modified.modified_edges, config);
      std::cout << solution_to_csv(sol);
      std::cerr << (sol.converged ? "converged" : "not converged") << " in " << sol.iterations
                << " iterations\n";
      return 0;
    }

    if (*bench) {
      const auto p = generate_sized_patient(seed, points);
      const auto result = run_latency_benchmark(p.tree, p.bc, runs);
      fs::create_directories(out_dir);
      std::ostringstream csv;
      csv << "run,seconds\n";
      for (std::size_t i = 0; i < result.seconds.size(); ++i) csv << i << ',' << result.seconds[i] << '\n';
      write_file(fs::path(out_dir) / "latency.csv", csv.str());
      write_file(fs::path(out_dir) / "latency_histogram.csv", histogram_csv(runtime_histogram(result.seconds, 1.0)));
      std::cout << "points " << result.points << "  runs " << runs << "  median " << result.median * 1e3
                << " ms  p99 " << result.p99 * 1e3 << " ms\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
