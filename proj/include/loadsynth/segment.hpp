#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "ingest.hpp"

namespace loadsynth {

enum class Scale { Day, Week, Year };

inline constexpr std::size_t kDaysPerWeek = 7;
inline constexpr std::size_t kWeeksPerYear = 52;
/// A modelled year is exactly 52 weeks; days 365 and 366 are dropped.
inline constexpr std::size_t kDaysPerYear = kWeeksPerYear * kDaysPerWeek;

constexpr std::size_t scale_days(Scale s) noexcept {
  switch (s) {
    case Scale::Day: return 1;
    case Scale::Week: return kDaysPerWeek;
    case Scale::Year: return kDaysPerYear;
  }
  return 0;
}

constexpr std::string_view scale_name(Scale s) noexcept {
  switch (s) {
    case Scale::Day: return "day";
    case Scale::Week: return "week";
    case Scale::Year: return "year";
  }
  return "?";
}

inline Scale parse_scale(std::string_view name) {
  if (name == "day") return Scale::Day;
  if (name == "week") return Scale::Week;
  if (name == "year") return Scale::Year;
  throw ArgumentError("unknown scale '" + std::string(name) + "'");
}

inline std::size_t points_per_day(int interval_minutes) {
  if (interval_minutes <= 0 || 1440 % interval_minutes != 0) {
    throw ArgumentError("interval_minutes must divide a day");
  }
  return static_cast<std::size_t>(1440 / interval_minutes);
}

struct Segment {
  Scale scale = Scale::Day;
  std::string source_user;
  std::size_t ordinal = 0;  // index within the source profile at this scale
  std::vector<double> values;

  [[nodiscard]] double total() const {
    double t = 0.0;
    for (double v : values) t += v;
    return t;
  }
};

struct SegmentOptions {
  /// Weekday (0 = Sunday) on which segmentation starts; the first
  /// midnight when unset.
  std::optional<unsigned> anchor_weekday;
};

struct Segmentation {
  std::vector<Segment> years;
  std::vector<Segment> weeks;
  std::vector<Segment> days;
  Timestamp origin = 0;  // first retained reading
  std::vector<std::string> warnings;
};

/// Cuts a profile into nested year, week and day segments starting at the
/// first midnight (optionally the first midnight on the anchor weekday).
///
/// When at least one whole 364-day year is present only whole years are
/// retained; otherwise all complete days are. Weeks and days are emitted
/// for every complete block inside the retained span, so week w covers
/// days 7w..7w+6 and year y covers weeks 52y..52y+51.
inline Segmentation segment_profile(const LoadProfile& profile, const SegmentOptions& options = {}) {
  profile.validate();
  const std::size_t ppd = points_per_day(profile.interval_minutes);
  Segmentation out;

  std::size_t first = 0;
  while (first < profile.values.size()) {
    const Timestamp t = profile.timestamp_at(first);
    if (seconds_past_midnight(t) == 0 && (!options.anchor_weekday || weekday_of(t) == *options.anchor_weekday)) {
      break;
    }
    ++first;
  }
  const std::size_t available = first < profile.values.size() ? profile.values.size() - first : 0;
  const std::size_t whole_days = available / ppd;
  if (whole_days == 0) {
    out.warnings.push_back("user " + profile.user_id + ": fewer than " + std::to_string(ppd) +
                           " aligned readings; no segments produced");
    return out;
  }
  out.origin = profile.timestamp_at(first);
  const std::size_t retained = whole_days >= kDaysPerYear ? whole_days / kDaysPerYear * kDaysPerYear : whole_days;
  if (retained < whole_days) {
    out.warnings.push_back("user " + profile.user_id + ": dropped " + std::to_string(whole_days - retained) +
                           " trailing days beyond whole 364-day years");
  }

  auto emit = [&](Scale scale, std::vector<Segment>& dest) {
    const std::size_t len = scale_days(scale) * ppd;
    const std::size_t count = retained / scale_days(scale);
    dest.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto begin = profile.values.begin() + static_cast<std::ptrdiff_t>(first + i * len);
      dest.push_back({scale, profile.user_id, i, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(len))});
    }
  };
  emit(Scale::Year, out.years);
  emit(Scale::Week, out.weeks);
  emit(Scale::Day, out.days);
  return out;
}

}  // namespace loadsynth
