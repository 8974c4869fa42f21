#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/intervention.hpp"
#include "psrom/network_solver.hpp"
#include "psrom/predictor_corrector.hpp"
#include "psrom/stats.hpp"
#include "psrom/synthetic.hpp"

namespace psrom {

struct ValidationConfig {
  OracleOptions oracle;
  // Outlet scaling is off by default so the ROM sees the same fixed
  // resistances as the oracle ground truth; enabling it switches the oracle
  // to the matching adaptive outlet law.
  SolverConfig solver = [] {
    SolverConfig c;
    c.bc_scaling_enabled = false;
    return c;
  }();
  LesionOptions lesions;
  EvaluationOptions evaluation;
  double blend_length = 0.2;  // cm
};

struct CaseResult {
  std::uint64_t case_id = 0;
  std::size_t lesion_count = 0;
  std::vector<ComparisonRecord> records;
  bool dropped = false;
  std::vector<std::string> log;  // dropped cases and skipped lesions
};

/// Fit ideal, run anchors, build the surface, then for each lesion apply
/// full idealization and compare oracle against ROM at the evaluation
/// points. Oracle non-convergence drops the case (or lesion) with a log
/// entry instead of throwing.
CaseResult run_validation_case(std::uint64_t case_id, const CenterlineTree& patient,
                               const BoundaryConditionSet& bc, const ValidationConfig& config = {});

/// Case i uses generator seed `seed + i`. Results are ordered by case id
/// regardless of `threads`.
std::vector<CaseResult> run_validation_batch(std::uint64_t seed, std::size_t cases,
                                             const SyntheticConfig& generator,
                                             const ValidationConfig& config = {}, unsigned threads = 1);

std::vector<ComparisonRecord> collect_records(const std::vector<CaseResult>& results);

struct RuntimeBin {
  double lo_ms = 0.0;
  double hi_ms = 0.0;
  std::size_t count = 0;
};
std::vector<RuntimeBin> runtime_histogram(const std::vector<ComparisonRecord>& records,
                                          double bin_width_ms = 5.0);
std::vector<RuntimeBin> runtime_histogram(const std::vector<double>& seconds, double bin_width_ms = 5.0);

struct LatencyResult {
  std::size_t points = 0;
  std::vector<double> seconds;  // one per run, in run order
  double median = 0.0;
  double p99 = 0.0;
};

/// Times `runs` predict steps (surface already built) on full idealization
/// of every detected lesion, or of the whole tree if there is none.
LatencyResult run_latency_benchmark(const CenterlineTree& patient, const BoundaryConditionSet& bc,
                                    std::size_t runs, const SolverConfig& solver = {});

/// Nearest-rank percentile of unsorted samples, q in [0, 1].
double percentile(std::vector<double> samples, double q);

// Report tables. Columns are fixed:
//   records.csv  case_id,lesion_index,kind,point,ffr_pre,ffr_oracle,ffr_psrom,delta,flagged
//   summary.csv  stratifier,stratum,n,bias,sd,bias_ci_lo,bias_ci_hi,pearson_r,pearson_ci_lo,
//                pearson_ci_hi,loa_lo,loa_hi,tost_p,chisq_p,slope,intercept
//   timing.csv   case_id,lesion_index,point,psrom_runtime_s
//   runtime_histogram.csv  bin_lo_ms,bin_hi_ms,count
// records.csv and summary.csv start with a comment line naming the ground
// truth and are byte-stable for a given seed; the timing tables are not.
inline constexpr const char* kGroundTruthNote =
    "# ground truth: steady 1D nonlinear network oracle (substitutes 3D CFD)";

std::string records_csv(const std::vector<ComparisonRecord>& records);
std::vector<ComparisonRecord> parse_records_csv(const std::string& text);
std::string summary_csv(const std::vector<std::pair<Stratifier, std::vector<StatsSummary>>>& tables,
                        const std::vector<std::string>& notes);
std::string timing_csv(const std::vector<ComparisonRecord>& records);
std::string histogram_csv(const std::vector<RuntimeBin>& bins);

/// Writes the four tables into `directory` (created if missing). `stratifiers`
/// selects the summary tables; "none" is always included. Throws Error on
/// I/O failure.
void export_report(const std::string& directory, const std::vector<ComparisonRecord>& records,
                   const std::vector<Stratifier>& stratifiers,
                   const std::vector<std::string>& extra_notes = {});

}  // namespace psrom
