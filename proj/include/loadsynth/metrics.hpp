#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "timestamp.hpp"

namespace loadsynth {

enum class VarianceNorm { L2, L1 };

/// Summary statistics of a set of equal-length profiles.
///
/// `sigma` is a surrogate (sqrt of d times the Euclidean norm of the
/// per-profile reading variances); it is not comparable to published
/// sigma columns, which have no recoverable definition.
struct MetricsReport {
  double mu = 0.0;
  double sigma = 0.0;
  double p_max = 0.0;
  double p_min = 0.0;
  double sigma_pro = 0.0;
  double mu_total = 0.0;
  double sigma_total = 0.0;
  double gamma_sigma_mu = 0.0;
  double c_max = 0.0;
  double c_min = 0.0;
  std::size_t d = 0;
  std::size_t n_profiles = 0;
  bool sigma_is_surrogate = true;
};

struct MetricsOptions {
  VarianceNorm sigma_pro_norm = VarianceNorm::L2;
};

/// gamma helper shared with the metric report: 0/0 is 0, x/0 is +inf.
inline double ratio_or_inf(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

inline MetricsReport compute_metrics(std::span<const std::span<const double>> profiles,
                                     const MetricsOptions& options = {}) {
  if (profiles.empty()) throw ArgumentError("compute_metrics: no profiles");
  const std::size_t d = profiles.front().size();
  if (d == 0) throw ArgumentError("compute_metrics: empty profiles");
  for (const auto& p : profiles)
    if (p.size() != d) throw ArgumentError("compute_metrics: profiles have unequal lengths");
  const double n = static_cast<double>(profiles.size());

  MetricsReport r;
  r.d = d;
  r.n_profiles = profiles.size();
  r.p_max = -std::numeric_limits<double>::infinity();
  r.p_min = std::numeric_limits<double>::infinity();
  r.c_max = -std::numeric_limits<double>::infinity();
  r.c_min = std::numeric_limits<double>::infinity();

  std::vector<double> totals;
  totals.reserve(profiles.size());
  double profile_var_sq = 0.0;
  for (const auto& p : profiles) {
    double total = 0.0;
    for (double v : p) {
      total += v;
      r.p_max = std::max(r.p_max, v);
      r.p_min = std::min(r.p_min, v);
    }
    totals.push_back(total);
    r.c_max = std::max(r.c_max, total);
    r.c_min = std::min(r.c_min, total);
    const double mean = total / static_cast<double>(d);
    double var = 0.0;
    for (double v : p) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    profile_var_sq += var * var;
  }
  for (double t : totals) r.mu_total += t;
  r.mu_total /= n;
  double var_total = 0.0;
  for (double t : totals) var_total += (t - r.mu_total) * (t - r.mu_total);
  r.sigma_total = std::sqrt(var_total / n);
  r.mu = r.mu_total / static_cast<double>(d);
  r.gamma_sigma_mu = ratio_or_inf(r.sigma_total, r.mu_total);
  r.sigma = std::sqrt(static_cast<double>(d) * std::sqrt(profile_var_sq));

  double norm_acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& p : profiles) mean += p[j];
    mean /= n;
    double var = 0.0;
    for (const auto& p : profiles) var += (p[j] - mean) * (p[j] - mean);
    var /= n;
    norm_acc += options.sigma_pro_norm == VarianceNorm::L2 ? var * var : var;
  }
  const double norm = options.sigma_pro_norm == VarianceNorm::L2 ? std::sqrt(norm_acc) : norm_acc;
  r.sigma_pro = std::sqrt(norm);
  return r;
}

inline MetricsReport compute_metrics(const std::vector<std::vector<double>>& profiles,
                                     const MetricsOptions& options = {}) {
  std::vector<std::span<const double>> spans(profiles.begin(), profiles.end());
  return compute_metrics(spans, options);
}

struct MetricDelta {
  std::string name;
  double raw = 0.0;
  double synth = 0.0;
  double delta = 0.0;                   // synth - raw
  std::optional<double> relative;       // |synth - raw| / |raw|; empty when raw == 0
};

struct Comparison {
  std::size_t d = 0;
  std::vector<MetricDelta> rows;

  [[nodiscard]] const MetricDelta& at(std::string_view name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw ArgumentError("unknown metric " + std::string(name));
  }
};

namespace detail {

struct NamedMetric {
  const char* name;
  double MetricsReport::*field;
};

inline constexpr NamedMetric kMetricFields[] = {
    {"mu", &MetricsReport::mu},
    {"sigma", &MetricsReport::sigma},
    {"p_max", &MetricsReport::p_max},
    {"p_min", &MetricsReport::p_min},
    {"sigma_pro", &MetricsReport::sigma_pro},
    {"mu_total", &MetricsReport::mu_total},
    {"sigma_total", &MetricsReport::sigma_total},
    {"gamma_sigma_mu", &MetricsReport::gamma_sigma_mu},
    {"c_max", &MetricsReport::c_max},
    {"c_min", &MetricsReport::c_min},
};

}  // namespace detail

inline Comparison compare_reports(const MetricsReport& raw, const MetricsReport& synth) {
  if (raw.d != synth.d) {
    throw ArgumentError("compare_reports: dimension mismatch (" + std::to_string(raw.d) + " vs " +
                        std::to_string(synth.d) + ")");
  }
  Comparison c;
  c.d = raw.d;
  for (const auto& f : detail::kMetricFields) {
    MetricDelta row{f.name, raw.*f.field, synth.*f.field, synth.*f.field - raw.*f.field, std::nullopt};
    if (row.raw != 0.0) row.relative = std::abs(row.delta) / std::abs(row.raw);
    c.rows.push_back(row);
  }
  return c;
}

/// name,raw,synth,delta,relative_delta ; relative is "n/a" for raw == 0.
inline void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << "metric,raw,synth,delta,relative_delta\n";
  for (const auto& r : c.rows) {
    out << r.name << ',' << format_double(r.raw) << ',' << format_double(r.synth) << ',' << format_double(r.delta)
        << ',' << (r.relative ? format_double(*r.relative) : std::string("n/a")) << '\n';
  }
}

inline void write_comparison_table(std::ostream& out, const Comparison& c) {
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %16s %16s %16s %12s\n", "metric", "raw", "synth", "delta", "rel_delta");
  out << line;
  for (const auto& r : c.rows) {
    char rel[32];
    if (r.relative) {
      std::snprintf(rel, sizeof rel, "%.6f", *r.relative);
    } else {
      std::snprintf(rel, sizeof rel, "n/a");
    }
    std::snprintf(line, sizeof line, "%-16s %16.4f %16.4f %16.4f %12s\n",
                  (r.name == "sigma" ? std::string("sigma*") : r.name).c_str(), r.raw, r.synth, r.delta, rel);
    out << line;
  }
  out << "d = " << c.d << "   (* sigma is a surrogate statistic)\n";
}

}  // namespace loadsynth
