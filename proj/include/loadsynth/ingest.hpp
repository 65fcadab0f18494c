#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "timestamp.hpp"

namespace loadsynth {

/// One user's evenly sampled consumption series, kWh per interval.
struct LoadProfile {
  std::string user_id;
  Timestamp start = 0;
  int interval_minutes = 15;
  std::vector<double> values;

  [[nodiscard]] Timestamp timestamp_at(std::size_t i) const {
    return start + static_cast<Timestamp>(i) * interval_minutes * 60;
  }

  /// Throws ValidationError when an invariant does not hold.
  void validate() const {
    if (interval_minutes <= 0) throw ValidationError("user " + user_id + ": interval_minutes must be positive");
    if (values.empty()) throw ValidationError("user " + user_id + ": profile has no readings");
    if (seconds_past_midnight(start) % (static_cast<std::int64_t>(interval_minutes) * 60) != 0) {
      throw ValidationError("user " + user_id + ": start " + format_timestamp(start) +
                            " is not aligned to the sampling interval");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || values[i] < 0.0) {
        throw ValidationError("user " + user_id + " at " + format_timestamp(timestamp_at(i)) +
                              ": reading must be finite and non-negative");
      }
    }
  }

  friend bool operator==(const LoadProfile&, const LoadProfile&) = default;
};

struct Exclusion {
  std::string user_id;
  std::string reason;
};

struct IngestOptions {
  int interval_minutes = 15;
  /// Longest run of missing intervals that is filled by interpolation.
  int max_gap = 4;
};

struct IngestResult {
  std::vector<LoadProfile> profiles;  // ordered by user_id
  std::vector<Exclusion> excluded;
  /// Indices of interpolated readings, keyed by user_id.
  std::map<std::string, std::vector<std::size_t>> imputed;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(begin, i - begin)));
      begin = i + 1;
    }
  }
  return out;
}

inline void strip_bom(std::string& s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF && static_cast<unsigned char>(s[1]) == 0xBB &&
      static_cast<unsigned char>(s[2]) == 0xBF) {
    s.erase(0, 3);
  }
}

}  // namespace detail

/// Reads `user_id,timestamp,kwh` rows into one profile per user.
///
/// Rows may arrive in any order. Gaps of up to `max_gap` missing intervals
/// are filled by linear interpolation between the neighbouring readings;
/// a longer gap excludes the user and records the reason instead.
inline IngestResult parse_csv(std::istream& in, const IngestOptions& options = {}) {
  if (options.interval_minutes <= 0 || 1440 % options.interval_minutes != 0) {
    throw ArgumentError("interval_minutes must divide a day");
  }
  if (options.max_gap < 0) throw ArgumentError("max_gap must be non-negative");
  const std::int64_t step = static_cast<std::int64_t>(options.interval_minutes) * 60;

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::map<std::string, std::vector<std::pair<Timestamp, double>>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) detail::strip_bom(line);
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_csv_line(view);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "user_id" || fields[1] != "timestamp" || fields[2] != "kwh") {
        throw ParseError("expected header user_id,timestamp,kwh", line_no);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 3) throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), line_no);
    if (fields[0].empty()) throw ParseError("empty user_id", line_no);
    const auto ts = parse_timestamp(fields[1]);
    if (!ts) throw ParseError("bad timestamp '" + std::string(fields[1]) + "'", line_no);
    const auto kwh = parse_double(fields[2]);
    if (!kwh) throw ParseError("bad reading '" + std::string(fields[2]) + "'", line_no);
    const std::string user(fields[0]);
    if (!std::isfinite(*kwh) || *kwh < 0.0) {
      throw ValidationError("user " + user + " at " + format_timestamp(*ts) + ": reading " +
                            std::string(fields[2]) + " must be finite and non-negative");
    }
    if (seconds_past_midnight(*ts) % step != 0) {
      throw ValidationError("user " + user + " at " + format_timestamp(*ts) +
                            ": timestamp not aligned to the sampling interval (line " + std::to_string(line_no) +
                            ")");
    }
    rows[user].emplace_back(*ts, *kwh);
  }
  if (!have_header) throw ParseError("missing header", line_no == 0 ? 1 : line_no);

  IngestResult result;
  for (auto& [user, readings] : rows) {
    std::stable_sort(readings.begin(), readings.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    LoadProfile profile{user, readings.front().first, options.interval_minutes, {}};
    std::vector<std::size_t> filled;
    bool keep = true;
    profile.values.push_back(readings.front().second);
    for (std::size_t i = 1; i < readings.size() && keep; ++i) {
      const auto [t0, v0] = readings[i - 1];
      const auto [t1, v1] = readings[i];
      if (t1 == t0) {
        throw ValidationError("user " + user + " at " + format_timestamp(t1) + ": duplicate timestamp");
      }
      const std::int64_t missing = (t1 - t0) / step - 1;
      if (missing > options.max_gap) {
        result.excluded.push_back({user, "gap of " + std::to_string(missing) + " intervals after " +
                                             format_timestamp(t0) + " exceeds max_gap " +
                                             std::to_string(options.max_gap)});
        keep = false;
        break;
      }
      for (std::int64_t k = 1; k <= missing; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(missing + 1);
        filled.push_back(profile.values.size());
        profile.values.push_back(v0 + (v1 - v0) * frac);
      }
      profile.values.push_back(v1);
    }
    if (!keep) continue;
    if (!filled.empty()) result.imputed.emplace(user, std::move(filled));
    result.profiles.push_back(std::move(profile));
  }
  return result;
}

inline IngestResult parse_csv(const std::filesystem::path& path, const IngestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file " + path.string());
  return parse_csv(in, options);
}

/// Writes profiles in the ingestion schema. Readings listed in `skip`
/// (e.g. IngestResult::imputed) are omitted.
inline void write_csv(std::ostream& out, std::span<const LoadProfile> profiles,
                      const std::map<std::string, std::vector<std::size_t>>* skip = nullptr) {
  out << "user_id,timestamp,kwh\n";
  for (const auto& p : profiles) {
    const std::vector<std::size_t>* omitted = nullptr;
    if (skip) {
      if (auto it = skip->find(p.user_id); it != skip->end()) omitted = &it->second;
    }
    std::size_t next_skip = 0;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      if (omitted && next_skip < omitted->size() && (*omitted)[next_skip] == i) {
        ++next_skip;
        continue;
      }
      out << p.user_id << ',' << format_timestamp(p.timestamp_at(i)) << ',' << format_double(p.values[i]) << '\n';
    }
  }
}

inline void write_exclusions(std::ostream& out, std::span<const Exclusion> excluded) {
  out << "user_id,reason\n";
  for (const auto& e : excluded) out << e.user_id << ',' << e.reason << '\n';
}

}  // namespace loadsynth
