#include <doctest.h>

#include <cmath>
#include <vector>

#include "psrom/errors.hpp"
#include "psrom/stats.hpp"

using namespace psrom;

// Reference values below come from scipy.stats (t, chi2, pearsonr) and numpy.polyfit.

TEST_CASE("two one-sided tests") {
  CHECK(tost_p_value(0.002, 0.01, 30) == doctest::Approx(7.03502572901086e-05).epsilon(1e-8));
  CHECK(tost_p_value(0.02, 0.01, 30) > 0.5);
  CHECK(tost_p_value(0.0, 0.0, 5) == 0.0);
  CHECK(tost_p_value(0.02, 0.0, 5) == 1.0);
}

TEST_CASE("chi-squared variance test") {
  CHECK(chisq_sd_p_value(0.015, 30) == doctest::Approx(0.028186823971176344).epsilon(1e-8));
  CHECK(chisq_sd_p_value(0.03, 30) > 0.9);
  CHECK(chisq_sd_p_value(0.0, 30) == 0.0);
}

TEST_CASE("summary") {
  const std::vector<double> oracle = {0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  const std::vector<double> rom = {0.71, 0.74, 0.82, 0.84, 0.91, 0.96};
  const auto s = summarize("all", rom, oracle);
  CHECK(s.n == 6);
  CHECK(s.bias == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(s.sd == doctest::Approx(0.012247448713915874).epsilon(1e-12));
  CHECK(s.bias_ci.lo == doctest::Approx(-0.00785291).epsilon(1e-5));
  CHECK(s.bias_ci.hi == doctest::Approx(0.01785291).epsilon(1e-5));
  CHECK(s.pearson_r == doctest::Approx(0.9919552183841279).epsilon(1e-12));
  CHECK(s.pearson_ci.lo == doctest::Approx(0.9252510763214231).epsilon(1e-9));
  CHECK(s.pearson_ci.hi == doctest::Approx(0.9991601545078308).epsilon(1e-9));
  CHECK(s.limits.lo == doctest::Approx(0.005 - 1.96 * 0.012247448713915874));
  CHECK(s.slope == doctest::Approx(1.01714286).epsilon(1e-7));
  CHECK(s.intercept == doctest::Approx(-0.00914286).epsilon(1e-5));
  CHECK(s.within_margins());

  const std::vector<double> two_a = {0.8, 0.9}, two_b = {0.81, 0.9};
  CHECK(std::isnan(summarize("x", two_a, two_b).pearson_ci.lo));
  CHECK_THROWS_AS(summarize("x", std::vector<double>{0.8}, std::vector<double>{0.8}), Error);
}

TEST_CASE("buckets") {
  CHECK(ffr_bucket(0.5) == 0);
  CHECK(ffr_bucket(0.70) == 1);
  CHECK(ffr_bucket(0.7499) == 1);
  CHECK(ffr_bucket(0.85) == 4);
  CHECK(ffr_bucket(0.90) == 5);
  CHECK(ffr_bucket(1.0) == 5);
  CHECK(ffr_bucket(1.02) == 5);
  CHECK(ffr_bucket_label(0) == "[0.00,0.70)");
  CHECK(ffr_bucket_label(1) == "[0.70,0.75)");
  CHECK(ffr_bucket_label(5) == "[0.90,1.00]");
}

TEST_CASE("stratified tables") {
  std::vector<ComparisonRecord> recs;
  auto add = [&](LesionKind k, double oracle, double rom) {
    ComparisonRecord r;
    r.kind = k;
    r.ffr_oracle = oracle;
    r.ffr_psrom = rom;
    r.delta = rom - oracle;
    recs.push_back(r);
  };
  add(LesionKind::Focal, 0.80, 0.81);
  add(LesionKind::Focal, 0.82, 0.82);
  add(LesionKind::Focal, 0.95, 0.94);
  add(LesionKind::SerialMember, 0.72, 0.72);
  add(LesionKind::Ostial, 0.60, 0.61);
  add(LesionKind::Ostial, 0.91, 0.90);

  std::vector<std::string> notes;
  const auto all = compute_stats(recs, Stratifier::None, &notes);
  REQUIRE(all.size() == 1);
  CHECK(all[0].n == 6);

  notes.clear();
  const auto by_kind = compute_stats(recs, Stratifier::LesionKind, &notes);
  REQUIRE(by_kind.size() == 2);
  CHECK(by_kind[0].stratum == "focal");
  CHECK(by_kind[1].stratum == "ostial");
  CHECK(notes.size() == 2);  // bifurcation empty, serial n = 1

  notes.clear();
  const auto by_ffr = compute_stats(recs, Stratifier::FfrRange, &notes);
  // rom values: 0.81 0.82 -> [0.80,0.85); 0.94 0.90 -> [0.90,1.00]; 0.72 and 0.61 alone
  REQUIRE(by_ffr.size() == 2);
  CHECK(by_ffr[0].stratum == "[0.80,0.85)");
  CHECK(by_ffr[1].stratum == "[0.90,1.00]");

  CHECK(parse_stratifier("ffr") == Stratifier::FfrRange);
  CHECK(std::string(stratifier_name(Stratifier::LesionKind)) == "lesion");
  CHECK_THROWS_AS(parse_stratifier("age"), Error);
}
