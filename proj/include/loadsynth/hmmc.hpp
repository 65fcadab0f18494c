#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cluster.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "markov.hpp"
#include "parallel.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "segment.hpp"

namespace loadsynth {

inline constexpr int kModelFormatVersion = 2;
/// 2015-01-01T00:00:00Z
inline constexpr Timestamp kDefaultSynthesisStart = 1420070400;

struct TrainConfig {
  double gamma = 0.10;
  std::size_t k_initial = 8;
  std::size_t k_max = 4096;
  std::size_t kmeans_max_iters = 300;
  std::size_t order = 3;
  std::size_t n_bins = 32;
  std::uint64_t seed = 0;
  SegmentOptions segmentation;
  std::size_t threads = 1;
};

/// All segments of a profile set, with the nesting recorded by index.
struct Corpus {
  int interval_minutes = 15;
  std::vector<Segment> years;
  std::vector<Segment> weeks;
  std::vector<Segment> days;
  std::vector<std::size_t> year_first_week;  // parallel to years
  std::vector<std::size_t> week_first_day;   // parallel to weeks
  std::vector<std::string> warnings;
};

inline Corpus build_corpus(std::span<const LoadProfile> profiles, const SegmentOptions& options = {}) {
  Corpus corpus;
  if (!profiles.empty()) corpus.interval_minutes = profiles.front().interval_minutes;
  for (const auto& p : profiles) {
    if (p.interval_minutes != corpus.interval_minutes) {
      throw ArgumentError("all profiles must share one sampling interval");
    }
    auto seg = segment_profile(p, options);
    const std::size_t week_base = corpus.weeks.size();
    const std::size_t day_base = corpus.days.size();
    for (std::size_t y = 0; y < seg.years.size(); ++y) corpus.year_first_week.push_back(week_base + y * kWeeksPerYear);
    for (std::size_t w = 0; w < seg.weeks.size(); ++w) corpus.week_first_day.push_back(day_base + w * kDaysPerWeek);
    std::move(seg.years.begin(), seg.years.end(), std::back_inserter(corpus.years));
    std::move(seg.weeks.begin(), seg.weeks.end(), std::back_inserter(corpus.weeks));
    std::move(seg.days.begin(), seg.days.end(), std::back_inserter(corpus.days));
    std::move(seg.warnings.begin(), seg.warnings.end(), std::back_inserter(corpus.warnings));
  }
  return corpus;
}

inline std::vector<std::span<const double>> segment_spans(std::span<const Segment> segments) {
  std::vector<std::span<const double>> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.emplace_back(s.values);
  return out;
}

struct DailyModel {
  Quantizer quantizer;
  MmcModel chain;  // over quantized readings
  friend bool operator==(const DailyModel&, const DailyModel&) = default;
};

/// Yearly patterns over weekly pattern ids, weekly patterns over daily
/// pattern ids, daily patterns over quantized readings.
struct HmmcModel {
  int format_version = kModelFormatVersion;
  int interval_minutes = 15;
  PatternCatalog day_catalog;
  PatternCatalog week_catalog;
  PatternCatalog year_catalog;
  std::vector<DailyModel> daily;   // indexed by daily pattern id
  std::vector<MmcModel> weekly;    // indexed by weekly pattern id
  std::vector<MmcModel> yearly;    // indexed by yearly pattern id
  std::vector<double> prior;       // over yearly pattern ids
  std::map<std::string, std::string> provenance;

  [[nodiscard]] std::size_t day_length() const { return points_per_day(interval_minutes); }
  [[nodiscard]] std::size_t year_length() const { return day_length() * kDaysPerYear; }

  friend bool operator==(const HmmcModel&, const HmmcModel&) = default;
};

/// Structural invariants of a trained or loaded model.
inline void validate(const HmmcModel& m) {
  const std::size_t ppd = m.day_length();
  if (m.daily.size() != m.day_catalog.size() || m.weekly.size() != m.week_catalog.size() ||
      m.yearly.size() != m.year_catalog.size() || m.prior.size() != m.year_catalog.size()) {
    throw ValidationError("hmmc: model and catalog sizes disagree");
  }
  if (m.year_catalog.size() == 0) throw ValidationError("hmmc: no yearly patterns");
  for (const auto& d : m.daily) {
    validate(d.chain);
    if (d.chain.length != ppd) throw ValidationError("hmmc: daily chain has wrong length");
    if (d.chain.n_states != d.quantizer.n_bins()) throw ValidationError("hmmc: daily chain/quantizer mismatch");
  }
  for (const auto& w : m.weekly) {
    validate(w);
    if (w.length != kDaysPerWeek || w.n_states != m.day_catalog.size()) {
      throw ValidationError("hmmc: weekly chain shape mismatch");
    }
  }
  for (const auto& y : m.yearly) {
    validate(y);
    if (y.length != kWeeksPerYear || y.n_states != m.week_catalog.size()) {
      throw ValidationError("hmmc: yearly chain shape mismatch");
    }
  }
  double total = 0.0;
  for (double p : m.prior) {
    if (!(p >= 0.0)) throw ValidationError("hmmc: negative prior");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("hmmc: prior does not sum to 1");
}

namespace detail {

inline PatternCatalog cluster_scale(std::span<const Segment> segments, Scale scale, const TrainConfig& config) {
  const auto spans = segment_spans(segments);
  AdaptiveKMeansOptions opts;
  opts.k_initial = config.k_initial;
  opts.k_max = config.k_max;
  opts.gamma = config.gamma;
  opts.max_iters = config.kmeans_max_iters;
  opts.seed = derive_seed(config.seed, static_cast<std::uint64_t>(scale) + 1);
  auto catalog = adaptive_kmeans(spans, scale, opts);
  catalog.segment_refs.reserve(segments.size());
  for (const auto& s : segments) catalog.segment_refs.push_back({s.source_user, s.ordinal});
  return catalog;
}

inline std::vector<State> label_segments(std::span<const Segment> segments, const PatternCatalog& catalog,
                                         std::size_t threads) {
  std::vector<State> labels(segments.size());
  parallel_for(segments.size(), threads, [&](std::size_t i) {
    labels[i] = static_cast<State>(assign_to_nearest(segments[i].values, catalog));
  });
  return labels;
}

}  // namespace detail

/// Bottom-up training: cluster each scale, then fit one chain per pattern
/// on the pattern's members (quantized readings for days, daily pattern
/// ids for weeks, weekly pattern ids for years).
inline HmmcModel train_hmmc(const Corpus& corpus, const TrainConfig& config) {
  if (corpus.years.empty()) {
    throw TrainingError("training needs at least one complete 364-day year (52 weeks) of readings");
  }
  if (config.order < 1) throw ArgumentError("order must be at least 1");
  HmmcModel model;
  model.interval_minutes = corpus.interval_minutes;

  const Scale scales[] = {Scale::Day, Scale::Week, Scale::Year};
  PatternCatalog catalogs[3];
  parallel_for(3, config.threads, [&](std::size_t i) {
    const auto& segs = scales[i] == Scale::Day ? corpus.days : scales[i] == Scale::Week ? corpus.weeks : corpus.years;
    catalogs[i] = detail::cluster_scale(segs, scales[i], config);
  });
  model.day_catalog = std::move(catalogs[0]);
  model.week_catalog = std::move(catalogs[1]);
  model.year_catalog = std::move(catalogs[2]);

  model.daily.resize(model.day_catalog.size());
  parallel_for(model.day_catalog.size(), config.threads, [&](std::size_t p) {
    const auto& members = model.day_catalog.patterns[p].members;
    std::vector<double> pooled;
    pooled.reserve(members.size() * model.day_length());
    for (std::size_t i : members) pooled.insert(pooled.end(), corpus.days[i].values.begin(), corpus.days[i].values.end());
    auto& daily = model.daily[p];
    daily.quantizer = fit_quantizer(pooled, config.n_bins);
    std::vector<StateSequence> seqs;
    seqs.reserve(members.size());
    for (std::size_t i : members) {
      StateSequence s;
      s.reserve(corpus.days[i].values.size());
      for (double v : corpus.days[i].values) s.push_back(daily.quantizer.quantize(v));
      seqs.push_back(std::move(s));
    }
    daily.chain = train_mmc(seqs, config.order, daily.quantizer.n_bins());
  });

  const auto day_labels = detail::label_segments(corpus.days, model.day_catalog, config.threads);
  model.weekly.resize(model.week_catalog.size());
  parallel_for(model.week_catalog.size(), config.threads, [&](std::size_t p) {
    std::vector<StateSequence> seqs;
    for (std::size_t w : model.week_catalog.patterns[p].members) {
      const auto first = day_labels.begin() + static_cast<std::ptrdiff_t>(corpus.week_first_day[w]);
      seqs.emplace_back(first, first + kDaysPerWeek);
    }
    model.weekly[p] = train_mmc(seqs, config.order, model.day_catalog.size());
  });

  const auto week_labels = detail::label_segments(corpus.weeks, model.week_catalog, config.threads);
  model.yearly.resize(model.year_catalog.size());
  model.prior.resize(model.year_catalog.size());
  for (std::size_t p = 0; p < model.year_catalog.size(); ++p) {
    const auto& members = model.year_catalog.patterns[p].members;
    std::vector<StateSequence> seqs;
    for (std::size_t y : members) {
      const auto first = week_labels.begin() + static_cast<std::ptrdiff_t>(corpus.year_first_week[y]);
      seqs.emplace_back(first, first + kWeeksPerYear);
    }
    model.yearly[p] = train_mmc(seqs, config.order, model.week_catalog.size());
    model.prior[p] = static_cast<double>(members.size()) / static_cast<double>(corpus.years.size());
  }

  model.provenance["profiles_years"] = std::to_string(corpus.years.size());
  model.provenance["profiles_weeks"] = std::to_string(corpus.weeks.size());
  model.provenance["profiles_days"] = std::to_string(corpus.days.size());
  return model;
}

inline HmmcModel train_hmmc(std::span<const LoadProfile> profiles, const TrainConfig& config) {
  return train_hmmc(build_corpus(profiles, config.segmentation), config);
}

struct SynthesisRequest {
  std::size_t count = 1;
  std::uint64_t seed = 0;
  /// Fixed yearly pattern for every profile; sampled from the prior when unset.
  std::optional<std::size_t> yearly_pattern;
  /// Per-profile yearly patterns (e.g. from the user model); overrides
  /// `yearly_pattern` when non-empty and must then hold `count` entries.
  std::vector<std::size_t> yearly_patterns;
  Timestamp start = kDefaultSynthesisStart;
  std::string user_prefix = "synth_";
  std::size_t threads = 1;
};

struct SynthesizedYear {
  LoadProfile profile;
  std::size_t yearly_pattern = 0;
  StateSequence week_patterns;  // 52 weekly pattern ids
  StateSequence day_patterns;   // 364 daily pattern ids
};

namespace detail {

inline std::string synthetic_user_id(const std::string& prefix, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return prefix + digits;
}

inline void check_request(const SynthesisRequest& request, std::size_t n_patterns) {
  if (request.count < 1) throw ArgumentError("synthesis count must be at least 1");
  if (!request.yearly_patterns.empty() && request.yearly_patterns.size() != request.count) {
    throw ArgumentError("per-profile yearly patterns must match count");
  }
  auto check_id = [&](std::size_t id) {
    if (id >= n_patterns) {
      throw ArgumentError("yearly pattern " + std::to_string(id) + " is not in the model (" +
                          std::to_string(n_patterns) + " patterns)");
    }
  };
  if (request.yearly_pattern) check_id(*request.yearly_pattern);
  for (std::size_t id : request.yearly_patterns) check_id(id);
}

inline std::size_t pick_pattern(const SynthesisRequest& request, std::size_t index, std::span<const double> prior,
                                Rng& rng) {
  if (!request.yearly_patterns.empty()) return request.yearly_patterns[index];
  if (request.yearly_pattern) return *request.yearly_pattern;
  return rng.categorical(prior);
}

}  // namespace detail

/// Top-down synthesis: yearly pattern -> 52 weekly ids -> 364 daily ids
/// -> readings, concatenated in order. Profile i draws from its own stream
/// seeded with derive_seed(request.seed, i).
inline std::vector<SynthesizedYear> synthesize_year_detailed(const HmmcModel& model, const SynthesisRequest& request) {
  detail::check_request(request, model.year_catalog.size());
  const std::size_t ppd = model.day_length();
  std::vector<SynthesizedYear> out(request.count);
  parallel_for(request.count, request.threads, [&](std::size_t i) {
    Rng rng(derive_seed(request.seed, i));
    auto& year = out[i];
    year.yearly_pattern = detail::pick_pattern(request, i, model.prior, rng);
    year.week_patterns = sample_mmc(model.yearly[year.yearly_pattern], rng);
    year.day_patterns.reserve(kDaysPerYear);
    for (State w : year.week_patterns) {
      const auto days = sample_mmc(model.weekly[w], rng);
      year.day_patterns.insert(year.day_patterns.end(), days.begin(), days.end());
    }
    auto& profile = year.profile;
    profile.user_id = detail::synthetic_user_id(request.user_prefix, i);
    profile.start = request.start;
    profile.interval_minutes = model.interval_minutes;
    profile.values.reserve(ppd * kDaysPerYear);
    for (State d : year.day_patterns) {
      const auto& daily = model.daily[d];
      for (State s : sample_mmc(daily.chain, rng)) profile.values.push_back(daily.quantizer.dequantize(s));
    }
  });
  return out;
}

inline std::vector<LoadProfile> synthesize_year(const HmmcModel& model, const SynthesisRequest& request) {
  auto detailed = synthesize_year_detailed(model, request);
  std::vector<LoadProfile> out;
  out.reserve(detailed.size());
  for (auto& y : detailed) out.push_back(std::move(y.profile));
  return out;
}

// Classic baseline ----------------------------------------------------------

struct BaselinePattern {
  Quantizer quantizer;       // pooled over all member years
  ClassicMarkovModel chain;  // over full-year state sequences
  std::size_t members = 0;
  friend bool operator==(const BaselinePattern&, const BaselinePattern&) = default;
};

/// One pooled first-order chain per yearly pattern, used for comparison.
struct BaselineModel {
  int format_version = kModelFormatVersion;
  int interval_minutes = 15;
  std::vector<BaselinePattern> patterns;
  std::vector<double> prior;
  std::map<std::string, std::string> provenance;

  [[nodiscard]] std::size_t year_length() const { return points_per_day(interval_minutes) * kDaysPerYear; }
  friend bool operator==(const BaselineModel&, const BaselineModel&) = default;
};

/// `year_labels[y]` is the yearly pattern of corpus.years[y].
inline BaselineModel train_baseline(const Corpus& corpus, std::span<const std::size_t> year_labels,
                                    std::size_t n_patterns, std::size_t n_bins) {
  if (corpus.years.empty()) throw TrainingError("baseline needs at least one complete 364-day year");
  if (year_labels.size() != corpus.years.size()) throw ArgumentError("baseline: one label per year required");
  BaselineModel model;
  model.interval_minutes = corpus.interval_minutes;
  model.patterns.resize(n_patterns);
  model.prior.assign(n_patterns, 0.0);
  for (std::size_t p = 0; p < n_patterns; ++p) {
    std::vector<std::size_t> members;
    for (std::size_t y = 0; y < year_labels.size(); ++y)
      if (year_labels[y] == p) members.push_back(y);
    if (members.empty()) continue;
    std::vector<double> pooled;
    for (std::size_t y : members) pooled.insert(pooled.end(), corpus.years[y].values.begin(), corpus.years[y].values.end());
    auto& bp = model.patterns[p];
    bp.members = members.size();
    bp.quantizer = fit_quantizer(pooled, n_bins);
    std::vector<StateSequence> seqs;
    for (std::size_t y : members) {
      StateSequence s;
      s.reserve(corpus.years[y].values.size());
      for (double v : corpus.years[y].values) s.push_back(bp.quantizer.quantize(v));
      seqs.push_back(std::move(s));
    }
    bp.chain = train_classic(seqs, bp.quantizer.n_bins());
    model.prior[p] = static_cast<double>(members.size()) / static_cast<double>(corpus.years.size());
  }
  return model;
}

/// Groups the profiles' years by the nearest yearly pattern of `model`.
inline BaselineModel train_baseline(const HmmcModel& model, std::span<const LoadProfile> profiles, std::size_t n_bins,
                                    const SegmentOptions& options = {}) {
  const auto corpus = build_corpus(profiles, options);
  if (corpus.interval_minutes != model.interval_minutes && !corpus.years.empty()) {
    throw ArgumentError("baseline: profiles and model use different sampling intervals");
  }
  std::vector<std::size_t> labels;
  labels.reserve(corpus.years.size());
  for (const auto& y : corpus.years) labels.push_back(assign_to_nearest(y.values, model.year_catalog));
  return train_baseline(corpus, labels, model.year_catalog.size(), n_bins);
}

inline std::vector<LoadProfile> synthesize_baseline_year(const BaselineModel& model, const SynthesisRequest& request) {
  detail::check_request(request, model.patterns.size());
  const std::size_t length = model.year_length();
  std::vector<LoadProfile> out(request.count);
  parallel_for(request.count, request.threads, [&](std::size_t i) {
    Rng rng(derive_seed(request.seed, i));
    const std::size_t p = detail::pick_pattern(request, i, model.prior, rng);
    const auto& bp = model.patterns[p];
    if (bp.members == 0) throw ArgumentError("baseline has no training years for pattern " + std::to_string(p));
    auto& profile = out[i];
    profile.user_id = detail::synthetic_user_id(request.user_prefix, i);
    profile.start = request.start;
    profile.interval_minutes = model.interval_minutes;
    profile.values.reserve(length);
    for (State s : sample_classic(bp.chain, length, rng)) profile.values.push_back(bp.quantizer.dequantize(s));
  });
  return out;
}

}  // namespace loadsynth
