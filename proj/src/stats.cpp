#include "psrom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "psrom/errors.hpp"

namespace psrom {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* stratifier_name(Stratifier s) {
  switch (s) {
    case Stratifier::None: return "none";
    case Stratifier::LesionKind: return "lesion";
    case Stratifier::FfrRange: return "ffr";
  }
  return "none";
}

Stratifier parse_stratifier(const std::string& name) {
  if (name == "none") return Stratifier::None;
  if (name == "lesion") return Stratifier::LesionKind;
  if (name == "ffr") return Stratifier::FfrRange;
  throw Error("unknown stratifier '" + name + "' (expected none, lesion or ffr)");
}

std::size_t ffr_bucket(double ffr) {
  constexpr std::size_t buckets = std::size(kFfrBucketEdges) - 1;
  for (std::size_t i = 1; i < buckets; ++i)
    if (ffr < kFfrBucketEdges[i]) return i - 1;
  return buckets - 1;
}

std::string ffr_bucket_label(std::size_t bucket) {
  char buf[32];
  const bool last = bucket + 2 == std::size(kFfrBucketEdges);
  std::snprintf(buf, sizeof buf, "[%.2f,%.2f%c", kFfrBucketEdges[bucket], kFfrBucketEdges[bucket + 1],
                last ? ']' : ')');
  return buf;
}

double tost_p_value(double mean, double sd, std::size_t n, double margin) {
  if (n < 2) throw Error("TOST needs at least two samples");
  if (sd == 0.0) return std::abs(mean) < margin ? 0.0 : 1.0;
  const double se = sd / std::sqrt(static_cast<double>(n));
  const boost::math::students_t t(static_cast<double>(n - 1));
  const double p_lower = boost::math::cdf(boost::math::complement(t, (mean + margin) / se));
  const double p_upper = boost::math::cdf(t, (mean - margin) / se);
  return std::max(p_lower, p_upper);
}

double chisq_sd_p_value(double sd, std::size_t n, double sigma0) {
  if (n < 2) throw Error("variance test needs at least two samples");
  if (sd == 0.0) return 0.0;
  const double dof = static_cast<double>(n - 1);
  const boost::math::chi_squared chi(dof);
  return boost::math::cdf(chi, dof * sd * sd / (sigma0 * sigma0));
}

StatsSummary summarize(std::string stratum, std::span<const double> ffr_psrom,
                       std::span<const double> ffr_oracle) {
  const std::size_t n = ffr_psrom.size();
  if (n != ffr_oracle.size()) throw Error("sample sizes differ");
  if (n < 2) throw Error("at least two comparisons are needed for statistics");
  const double dn = static_cast<double>(n);

  StatsSummary s;
  s.stratum = std::move(stratum);
  s.n = n;
  double mean_p = 0.0, mean_o = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.bias += ffr_psrom[i] - ffr_oracle[i];
    mean_p += ffr_psrom[i];
    mean_o += ffr_oracle[i];
  }
  s.bias /= dn;
  mean_p /= dn;
  mean_o /= dn;

  double ss_d = 0.0, s_pp = 0.0, s_oo = 0.0, s_po = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = ffr_psrom[i] - ffr_oracle[i] - s.bias;
    ss_d += d * d;
    s_pp += (ffr_psrom[i] - mean_p) * (ffr_psrom[i] - mean_p);
    s_oo += (ffr_oracle[i] - mean_o) * (ffr_oracle[i] - mean_o);
    s_po += (ffr_psrom[i] - mean_p) * (ffr_oracle[i] - mean_o);
  }
  s.sd = std::sqrt(ss_d / (dn - 1.0));

  const boost::math::students_t t(dn - 1.0);
  const double half = boost::math::quantile(boost::math::complement(t, 0.025)) * s.sd / std::sqrt(dn);
  s.bias_ci = {s.bias - half, s.bias + half};
  s.limits = {s.bias - 1.96 * s.sd, s.bias + 1.96 * s.sd};
  s.tost_p = tost_p_value(s.bias, s.sd, n);
  s.chisq_p = chisq_sd_p_value(s.sd, n);

  if (s_pp > 0.0 && s_oo > 0.0) {
    s.pearson_r = std::clamp(s_po / std::sqrt(s_pp * s_oo), -1.0, 1.0);
    if (n > 3 && std::abs(s.pearson_r) < 1.0) {
      const double z = std::atanh(s.pearson_r);
      const double zc = boost::math::quantile(boost::math::normal(), 0.975) / std::sqrt(dn - 3.0);
      s.pearson_ci = {std::tanh(z - zc), std::tanh(z + zc)};
    } else {
      s.pearson_ci = {kNaN, kNaN};
    }
  } else {
    s.pearson_r = kNaN;
    s.pearson_ci = {kNaN, kNaN};
  }
  if (s_oo > 0.0) {
    s.slope = s_po / s_oo;
    s.intercept = mean_p - s.slope * mean_o;
  } else {
    s.slope = kNaN;
    s.intercept = kNaN;
  }
  return s;
}

std::vector<StatsSummary> compute_stats(const std::vector<ComparisonRecord>& records, Stratifier stratifier,
                                        std::vector<std::string>* notes) {
  // Fixed stratum order keeps reports stable.
  std::vector<std::string> labels;
  auto stratum_of = [&](const ComparisonRecord& r) -> std::size_t {
    switch (stratifier) {
      case Stratifier::None: return 0;
      case Stratifier::LesionKind: return static_cast<std::size_t>(r.kind);
      case Stratifier::FfrRange: return ffr_bucket(r.ffr_psrom);
    }
    return 0;
  };
  switch (stratifier) {
    case Stratifier::None: labels = {"all"}; break;
    case Stratifier::LesionKind:
      for (auto k : {LesionKind::Focal, LesionKind::Ostial, LesionKind::Bifurcation, LesionKind::SerialMember})
        labels.push_back(lesion_kind_name(k));
      break;
    case Stratifier::FfrRange:
      for (std::size_t b = 0; b + 1 < std::size(kFfrBucketEdges); ++b) labels.push_back(ffr_bucket_label(b));
      break;
  }

  std::vector<std::vector<double>> p(labels.size()), o(labels.size());
  for (const auto& r : records) {
    const auto k = stratum_of(r);
    p[k].push_back(r.ffr_psrom);
    o[k].push_back(r.ffr_oracle);
  }
  std::vector<StatsSummary> out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (p[k].size() < 2) {
      if (notes)
        notes->push_back("stratum " + labels[k] + " omitted: n = " + std::to_string(p[k].size()));
      continue;
    }
    out.push_back(summarize(labels[k], p[k], o[k]));
  }
  return out;
}

}  // namespace psrom
