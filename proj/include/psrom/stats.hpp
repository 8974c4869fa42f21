#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psrom/centerline.hpp"
#include "psrom/intervention.hpp"

namespace psrom {

struct ComparisonRecord {
  std::uint64_t case_id = 0;
  LesionKind kind = LesionKind::Focal;
  std::size_t lesion_index = 0;  // treated lesion within the case
  PointId point = 0;             // evaluation point
  double ffr_oracle = 1.0;
  double ffr_psrom = 1.0;
  double delta = 0.0;            // ffr_psrom - ffr_oracle
  double ffr_pre = 1.0;          // oracle FFR before modification
  double psrom_runtime = 0.0;    // seconds, predict step only
  bool flagged = false;          // an FFR above 1 (recovery overshoot)
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr double kEquivalenceMargin = 0.01;  // on the bias
inline constexpr double kSdMargin = 0.02;

struct StatsSummary {
  std::string stratum;
  std::size_t n = 0;
  double bias = 0.0;
  double sd = 0.0;
  Interval bias_ci;
  double pearson_r = 0.0;
  Interval pearson_ci;
  Interval limits;        // Bland-Altman, bias -/+ 1.96 SD
  double tost_p = 1.0;    // H0: |mean delta| >= margin
  double chisq_p = 1.0;   // H0: SD >= 0.02
  double slope = 0.0;     // OLS of ffr_psrom on ffr_oracle
  double intercept = 0.0;

  bool within_margins() const { return std::abs(bias) <= kEquivalenceMargin && sd <= kSdMargin; }
};

enum class Stratifier { None, LesionKind, FfrRange };

const char* stratifier_name(Stratifier s);
Stratifier parse_stratifier(const std::string& name);

/// FFR bucket edges [0,0.7) [0.7,0.75) ... [0.85,0.9) [0.9,1.0]; values
/// above 1 fall in the last bucket.
inline constexpr double kFfrBucketEdges[] = {0.0, 0.70, 0.75, 0.80, 0.85, 0.90, 1.0};
std::size_t ffr_bucket(double ffr);
std::string ffr_bucket_label(std::size_t bucket);

/// Two one-sided t-tests of the mean against +/- margin; returns the larger p.
double tost_p_value(double mean, double sd, std::size_t n, double margin = kEquivalenceMargin);
/// Lower-tail chi-squared test of (n-1) s^2 / sigma0^2; small p rejects SD >= sigma0.
double chisq_sd_p_value(double sd, std::size_t n, double sigma0 = kSdMargin);

/// Throws Error when n < 2.
StatsSummary summarize(std::string stratum, std::span<const double> ffr_psrom,
                       std::span<const double> ffr_oracle);

/// One summary per stratum with n >= 2 in a fixed order; strata that are
/// empty or too small are listed in `notes`.
std::vector<StatsSummary> compute_stats(const std::vector<ComparisonRecord>& records, Stratifier stratifier,
                                        std::vector<std::string>* notes = nullptr);

}  // namespace psrom
