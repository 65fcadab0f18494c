#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "ingest.hpp"
#include "rng.hpp"
#include "segment.hpp"
#include "timestamp.hpp"
#include "user_model.hpp"

// Synthetic corpora with known structure, used by the tests, the
// acceptance suite and the bundled example data.

namespace loadsynth::fixtures {

/// 2015-01-04T00:00:00Z, a Sunday.
inline constexpr Timestamp kFixtureStart = 1420329600;

inline double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double bump(double hour, double centre, double width) {
  const double z = (hour - centre) / width;
  return std::exp(-0.5 * z * z);
}

/// kWh per 15 minutes for one day shape evaluated at `hour` in [0, 24).
enum class DayShape { ResidentialWeekday, ResidentialWeekend, CommercialWeekday, CommercialWeekend, MorningPeak, AfternoonPeak };

inline double shape_value(DayShape shape, double hour) {
  switch (shape) {
    case DayShape::ResidentialWeekday:
      return 0.25 + 0.6 * bump(hour, 7.5, 1.0) + 0.9 * bump(hour, 19.5, 1.6);
    case DayShape::ResidentialWeekend:
      return 0.30 + 0.7 * bump(hour, 10.0, 1.5) + 0.9 * bump(hour, 19.0, 1.8);
    case DayShape::CommercialWeekday: {
      const double rise = 1.0 / (1.0 + std::exp(-(hour - 8.0) * 3.0));
      const double fall = 1.0 / (1.0 + std::exp((hour - 18.0) * 3.0));
      return 0.5 + 2.0 * rise * fall;
    }
    case DayShape::CommercialWeekend:
      return 0.55 + 0.25 * bump(hour, 12.0, 3.0);
    case DayShape::MorningPeak:
      return 0.2 + 2.0 * bump(hour, 8.0, 2.0);
    case DayShape::AfternoonPeak:
      return 0.2 + 2.0 * bump(hour, 16.0, 2.0);
  }
  return 0.0;
}

struct TwoBehaviorOptions {
  std::size_t users_per_behavior = 10;
  /// Odd-numbered users also run an overnight load (01:00 to 03:30) that
  /// adds this fraction to their daily energy.
  double overnight_share = 0.19;
  double season_amplitude = 0.08;
  double week_sigma = 0.06;
  double day_sigma = 0.06;
  double reading_sigma = 0.10;
  std::uint64_t seed = 7;
  int interval_minutes = 15;
};

struct LabeledCorpus {
  std::vector<LoadProfile> profiles;
  std::vector<std::size_t> behavior;  // parallel to profiles
};

/// One 364-day year per user. Behaviour 0 is residential (two daily
/// peaks), behaviour 1 is commercial (weekday plateau).
inline LabeledCorpus two_behavior_corpus(const TwoBehaviorOptions& o = {}) {
  LabeledCorpus out;
  const std::size_t ppd = points_per_day(o.interval_minutes);
  constexpr DayShape kShapes[] = {DayShape::ResidentialWeekday, DayShape::ResidentialWeekend,
                                  DayShape::CommercialWeekday, DayShape::CommercialWeekend};
  auto shape_index = [](DayShape s) { return static_cast<std::size_t>(s); };
  double energy[4] = {};
  for (DayShape s : kShapes)
    for (std::size_t i = 0; i < ppd; ++i) energy[shape_index(s)] += shape_value(s, 24.0 * static_cast<double>(i) / ppd);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t u = 0; u < o.users_per_behavior; ++u) {
      const std::size_t index = b * o.users_per_behavior + u;
      Rng rng(derive_seed(o.seed, index));
      const bool overnight = u % 2 == 1;
      LoadProfile p;
      p.user_id = std::string(b == 0 ? "res_" : "com_") + std::to_string(100 + u);
      p.start = kFixtureStart;
      p.interval_minutes = o.interval_minutes;
      p.values.reserve(ppd * kDaysPerYear);
      for (std::size_t w = 0; w < kWeeksPerYear; ++w) {
        const double week_factor = std::max(0.5, 1.0 + o.week_sigma * normal(rng));
        for (std::size_t d = 0; d < kDaysPerWeek; ++d) {
          const std::size_t day = w * kDaysPerWeek + d;
          const bool weekend = d == 0 || d == 6;
          const double season =
              1.0 + o.season_amplitude * std::cos(2.0 * std::numbers::pi * static_cast<double>(day) / kDaysPerYear);
          const double day_factor = std::max(0.5, 1.0 + o.day_sigma * normal(rng));
          const DayShape shape = b == 0 ? (weekend ? DayShape::ResidentialWeekend : DayShape::ResidentialWeekday)
                                        : (weekend ? DayShape::CommercialWeekend : DayShape::CommercialWeekday);
          const double extra = overnight ? o.overnight_share * energy[shape_index(shape)] / (2.5 * ppd / 24.0) : 0.0;
          for (std::size_t i = 0; i < ppd; ++i) {
            const double hour = 24.0 * static_cast<double>(i) / static_cast<double>(ppd);
            const double noise = std::max(0.0, 1.0 + o.reading_sigma * normal(rng));
            const double block = (hour >= 1.0 && hour < 3.5) ? extra : 0.0;
            p.values.push_back(season * week_factor * day_factor * (shape_value(shape, hour) + block) * noise);
          }
        }
      }
      out.profiles.push_back(std::move(p));
      out.behavior.push_back(b);
    }
  }
  return out;
}

/// A single user whose weekdays peak in the morning and whose weekends
/// peak in the afternoon; the two curves cross. Only the daily scale varies.
inline LoadProfile crossing_peaks_year(std::uint64_t seed = 11, double day_sigma = 0.03, int interval_minutes = 15) {
  Rng rng(seed);
  const std::size_t ppd = points_per_day(interval_minutes);
  LoadProfile p;
  p.user_id = "crossing";
  p.start = kFixtureStart;
  p.interval_minutes = interval_minutes;
  for (std::size_t day = 0; day < kDaysPerYear; ++day) {
    const std::size_t dow = day % kDaysPerWeek;
    const bool weekend = dow == 0 || dow == 6;
    const double scale = std::max(0.5, 1.0 + day_sigma * normal(rng));
    for (std::size_t i = 0; i < ppd; ++i) {
      const double hour = 24.0 * static_cast<double>(i) / static_cast<double>(ppd);
      p.values.push_back(scale * shape_value(weekend ? DayShape::AfternoonPeak : DayShape::MorningPeak, hour));
    }
  }
  return p;
}

/// The same residential week repeated for a whole year.
inline LoadProfile periodic_year(int interval_minutes = 15) {
  const std::size_t ppd = points_per_day(interval_minutes);
  LoadProfile p;
  p.user_id = "periodic";
  p.start = kFixtureStart;
  p.interval_minutes = interval_minutes;
  for (std::size_t day = 0; day < kDaysPerYear; ++day) {
    const std::size_t dow = day % kDaysPerWeek;
    const DayShape shape = (dow == 0 || dow == 6) ? DayShape::ResidentialWeekend : DayShape::ResidentialWeekday;
    for (std::size_t i = 0; i < ppd; ++i) p.values.push_back(shape_value(shape, 24.0 * static_cast<double>(i) / ppd));
  }
  return p;
}

/// One year of independent noisy readings; every day and week differs.
inline LoadProfile noisy_year(std::uint64_t seed, int interval_minutes = 15) {
  Rng rng(seed);
  const std::size_t ppd = points_per_day(interval_minutes);
  LoadProfile p;
  p.user_id = "noisy";
  p.start = kFixtureStart;
  p.interval_minutes = interval_minutes;
  for (std::size_t day = 0; day < kDaysPerYear; ++day) {
    for (std::size_t i = 0; i < ppd; ++i) {
      const double hour = 24.0 * static_cast<double>(i) / static_cast<double>(ppd);
      p.values.push_back(shape_value(DayShape::ResidentialWeekday, hour) * (0.5 + rng.uniform()));
    }
  }
  return p;
}

// User attributes ------------------------------------------------------

inline nlohmann::json household_schema_json() {
  return {
      {"schema_id", "household-v1"},
      {"attributes",
       {{{"name", "house_year"}, {"type", "integer"}},
        {{"name", "floor_area"}, {"type", "numeric"}},
        {{"name", "building_type"}, {"type", "categorical"}, {"levels", {"house", "apartment", "office"}}},
        {{"name", "owner_name"}, {"type", "categorical"}, {"levels", {"redacted"}}}}},
      {"allowlist", {"house_year", "floor_area", "building_type"}},
  };
}

/// Attribute rows for the users of two_behavior_corpus. Residential users
/// live in houses or apartments, commercial users in offices.
inline std::vector<UserRow> household_users(const LabeledCorpus& corpus, const UserSchema& schema,
                                            std::uint64_t seed = 5) {
  std::vector<UserRow> rows;
  for (std::size_t i = 0; i < corpus.profiles.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const bool commercial = corpus.behavior[i] == 1;
    UserRow row;
    row.user_id = corpus.profiles[i].user_id;
    row.record.schema_id = schema.schema_id;
    row.record.values = {
        static_cast<double>(1970 + rng.below(45)),
        std::round((commercial ? 400.0 : 140.0) * (0.8 + 0.4 * rng.uniform())),
        std::string(commercial ? "office" : (rng.uniform() < 0.6 ? "house" : "apartment")),
    };
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace loadsynth::fixtures
