#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "error.hpp"
#include "hmmc.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "timestamp.hpp"
#include "user_model.hpp"

// Run configuration: a versioned `key = value` text file. Blank lines and
// lines starting with '#' are ignored. Unknown keys are rejected.

namespace loadsynth {

inline constexpr int kConfigVersion = 1;

struct RunConfig {
  int config_version = kConfigVersion;
  double gamma = 0.10;
  std::size_t k_initial = 8;
  std::size_t k_max = 4096;
  std::size_t kmeans_max_iters = 300;
  std::size_t order_l = 3;
  std::size_t n_bins = 32;
  std::uint64_t seed = 0;
  int interval_minutes = 15;
  std::size_t max_gap = 4;
  double logit_lambda = 1e-3;
  std::optional<unsigned> anchor_weekday;
  std::size_t threads = 0;  // 0: LOADSYNTH_THREADS or 1
  VarianceNorm sigma_pro_norm = VarianceNorm::L2;
  std::string input_csv;
  std::string users_csv;
  std::string schema_path;
  std::string allowlist_path;
  std::string model_path;

  [[nodiscard]] TrainConfig train_config() const {
    TrainConfig t;
    t.gamma = gamma;
    t.k_initial = k_initial;
    t.k_max = k_max;
    t.kmeans_max_iters = kmeans_max_iters;
    t.order = order_l;
    t.n_bins = n_bins;
    t.seed = seed;
    t.segmentation.anchor_weekday = anchor_weekday;
    t.threads = resolved_threads();
    return t;
  }

  [[nodiscard]] IngestOptions ingest_options() const { return {interval_minutes, static_cast<int>(max_gap)}; }

  [[nodiscard]] LogitOptions logit_options() const {
    LogitOptions o;
    o.lambda = logit_lambda;
    return o;
  }

  [[nodiscard]] std::size_t resolved_threads() const { return threads == 0 ? default_threads() : threads; }
};

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    const auto v = parse_double(text);
    if (!v) throw ArgumentError("config: " + std::string(key) + " expects a number, got '" + std::string(text) + "'");
    value = *v;
  } else {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
      throw ArgumentError("config: " + std::string(key) + " expects an integer, got '" + std::string(text) + "'");
    }
  }
  return value;
}

inline void require(bool ok, std::string_view key, std::string_view range) {
  if (!ok) throw ArgumentError("config: " + std::string(key) + " must be " + std::string(range));
}

}  // namespace detail

/// Range checks shared by file parsing and command-line overrides.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.config_version == kConfigVersion, "config_version", std::to_string(kConfigVersion));
  require(c.gamma > 0.0 && std::isfinite(c.gamma), "gamma", "a positive finite number");
  require(c.k_initial >= 1, "k_initial", ">= 1");
  require(c.k_max >= c.k_initial, "k_max", ">= k_initial");
  require(c.kmeans_max_iters >= 1, "kmeans_max_iters", ">= 1");
  require(c.order_l >= 1 && c.order_l <= 95, "order_l", "in [1, 95]");
  require(c.n_bins >= 1 && c.n_bins <= 65536, "n_bins", "in [1, 65536]");
  require(c.interval_minutes >= 1 && 1440 % c.interval_minutes == 0, "interval_minutes", "a divisor of 1440");
  require(c.logit_lambda >= 0.0 && std::isfinite(c.logit_lambda), "logit_lambda", ">= 0");
  require(!c.anchor_weekday || *c.anchor_weekday <= 6, "anchor_weekday", "in [0, 6] (0 = Sunday) or none");
  require(c.threads <= 1024, "threads", "in [0, 1024]");
}

/// Applies one `key = value` setting.
inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_number;
  const std::string k(key);
  if (k == "config_version") c.config_version = parse_number<int>(key, value);
  else if (k == "gamma") c.gamma = parse_number<double>(key, value);
  else if (k == "k_initial") c.k_initial = parse_number<std::size_t>(key, value);
  else if (k == "k_max") c.k_max = parse_number<std::size_t>(key, value);
  else if (k == "kmeans_max_iters") c.kmeans_max_iters = parse_number<std::size_t>(key, value);
  else if (k == "order_l") c.order_l = parse_number<std::size_t>(key, value);
  else if (k == "n_bins") c.n_bins = parse_number<std::size_t>(key, value);
  else if (k == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (k == "interval_minutes") c.interval_minutes = parse_number<int>(key, value);
  else if (k == "max_gap") c.max_gap = parse_number<std::size_t>(key, value);
  else if (k == "logit_lambda") c.logit_lambda = parse_number<double>(key, value);
  else if (k == "anchor_weekday") {
    if (value == "none") c.anchor_weekday.reset();
    else c.anchor_weekday = parse_number<unsigned>(key, value);
  } else if (k == "threads") c.threads = parse_number<std::size_t>(key, value);
  else if (k == "sigma_pro_norm") {
    if (value == "l2") c.sigma_pro_norm = VarianceNorm::L2;
    else if (value == "l1") c.sigma_pro_norm = VarianceNorm::L1;
    else throw ArgumentError("config: sigma_pro_norm must be l1 or l2");
  } else if (k == "input_csv") c.input_csv = value;
  else if (k == "users_csv") c.users_csv = value;
  else if (k == "schema") c.schema_path = value;
  else if (k == "allowlist") c.allowlist_path = value;
  else if (k == "model") c.model_path = value;
  else throw ArgumentError("config: unknown key '" + k + "'");
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const ArgumentError& e) {
      throw ArgumentError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_config(in);
}

/// Every key in canonical order, formatted so parse_config reads it back.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  return {
      {"config_version", std::to_string(c.config_version)},
      {"gamma", format_double(c.gamma)},
      {"k_initial", std::to_string(c.k_initial)},
      {"k_max", std::to_string(c.k_max)},
      {"kmeans_max_iters", std::to_string(c.kmeans_max_iters)},
      {"order_l", std::to_string(c.order_l)},
      {"n_bins", std::to_string(c.n_bins)},
      {"seed", std::to_string(c.seed)},
      {"interval_minutes", std::to_string(c.interval_minutes)},
      {"max_gap", std::to_string(c.max_gap)},
      {"logit_lambda", format_double(c.logit_lambda)},
      {"anchor_weekday", c.anchor_weekday ? std::to_string(*c.anchor_weekday) : "none"},
      {"threads", std::to_string(c.threads)},
      {"sigma_pro_norm", c.sigma_pro_norm == VarianceNorm::L2 ? "l2" : "l1"},
      {"input_csv", c.input_csv},
      {"users_csv", c.users_csv},
      {"schema", c.schema_path},
      {"allowlist", c.allowlist_path},
      {"model", c.model_path},
  };
}

inline void write_config(std::ostream& out, const RunConfig& c) {
  for (const auto& [k, v] : config_entries(c)) out << k << " = " << v << '\n';
}

/// The settings that determine a trained model, for its provenance block.
/// Paths and thread counts are left out so the file does not depend on
/// where or how fast it was built.
inline std::string config_snapshot(const RunConfig& c) {
  std::string s;
  for (const auto& [k, v] : config_entries(c)) {
    if (k == "threads" || k == "input_csv" || k == "users_csv" || k == "schema" || k == "allowlist" || k == "model") {
      continue;
    }
    s += k + "=" + v + ";";
  }
  return s;
}

}  // namespace loadsynth
