#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "ingest.hpp"
#include "rng.hpp"
#include "timestamp.hpp"

namespace loadsynth {

enum class AttributeType { Numeric, Integer, Categorical };

struct AttributeSpec {
  std::string name;
  AttributeType type = AttributeType::Numeric;
  std::vector<std::string> levels;  // categorical only

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

/// Attributes kept after the allowlist filter, in declaration order.
struct UserSchema {
  std::string schema_id;
  std::vector<AttributeSpec> attributes;
  /// Declared attributes removed because they are not allowlisted.
  std::vector<std::string> filtered;

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == name) return i;
    return std::nullopt;
  }
  friend bool operator==(const UserSchema&, const UserSchema&) = default;
};

using AttributeValue = std::variant<double, std::string>;

struct UserRecord {
  std::string schema_id;
  std::vector<AttributeValue> values;
  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

inline std::string_view attribute_type_name(AttributeType t) {
  switch (t) {
    case AttributeType::Numeric: return "numeric";
    case AttributeType::Integer: return "integer";
    case AttributeType::Categorical: return "categorical";
  }
  return "?";
}

inline AttributeType parse_attribute_type(std::string_view s) {
  if (s == "numeric") return AttributeType::Numeric;
  if (s == "integer") return AttributeType::Integer;
  if (s == "categorical") return AttributeType::Categorical;
  throw ValidationError("unknown attribute type '" + std::string(s) + "'");
}

/// Reads a schema sidecar:
///   {"schema_id": ..., "attributes": [{"name", "type", "levels"?}], "allowlist": [...]}
/// The allowlist may instead come from a text file (one name per line,
/// '#' comments). Attributes not on the allowlist are dropped.
inline UserSchema parse_schema(const nlohmann::json& j, const std::optional<std::vector<std::string>>& allowlist = {}) {
  UserSchema schema;
  try {
    schema.schema_id = j.at("schema_id").get<std::string>();
    std::set<std::string> allowed;
    if (allowlist) {
      allowed.insert(allowlist->begin(), allowlist->end());
    } else if (j.contains("allowlist")) {
      for (const auto& a : j.at("allowlist")) allowed.insert(a.get<std::string>());
    } else {
      throw ValidationError("schema " + schema.schema_id + " declares no allowlist");
    }
    std::set<std::string> seen;
    for (const auto& a : j.at("attributes")) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      if (spec.name.empty() || spec.name == "user_id") throw ValidationError("invalid attribute name");
      if (!seen.insert(spec.name).second) throw ValidationError("duplicate attribute " + spec.name);
      spec.type = parse_attribute_type(a.at("type").get<std::string>());
      if (spec.type == AttributeType::Categorical) {
        spec.levels = a.at("levels").get<std::vector<std::string>>();
        if (spec.levels.empty()) throw ValidationError("categorical attribute " + spec.name + " has no levels");
      }
      if (allowed.count(spec.name)) {
        schema.attributes.push_back(std::move(spec));
      } else {
        schema.filtered.push_back(spec.name);
      }
    }
    for (const auto& name : allowed)
      if (!seen.count(name)) throw ValidationError("allowlist names undeclared attribute " + name);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed schema: ") + e.what());
  }
  if (schema.attributes.empty()) throw ValidationError("schema keeps no attributes after filtering");
  return schema;
}

inline std::vector<std::string> read_allowlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open allowlist " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (!t.empty() && t.front() != '#') names.emplace_back(t);
  }
  return names;
}

inline UserSchema load_schema(const std::filesystem::path& path,
                              const std::optional<std::filesystem::path>& allowlist_path = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema " + path.string() + ": " + e.what());
  }
  std::optional<std::vector<std::string>> allow;
  if (allowlist_path) allow = read_allowlist(*allowlist_path);
  return parse_schema(j, allow);
}

inline void validate(const UserRecord& r, const UserSchema& schema) {
  if (r.schema_id != schema.schema_id) throw ValidationError("record schema " + r.schema_id + " != " + schema.schema_id);
  if (r.values.size() != schema.attributes.size()) throw ValidationError("record arity does not match schema");
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const auto& spec = schema.attributes[i];
    if (spec.type == AttributeType::Categorical) {
      const auto* level = std::get_if<std::string>(&r.values[i]);
      if (!level || std::find(spec.levels.begin(), spec.levels.end(), *level) == spec.levels.end()) {
        throw ValidationError("attribute " + spec.name + ": value is not a declared level");
      }
    } else {
      const auto* v = std::get_if<double>(&r.values[i]);
      if (!v || !std::isfinite(*v)) throw ValidationError("attribute " + spec.name + ": expected a finite number");
      if (spec.type == AttributeType::Integer && *v != std::floor(*v)) {
        throw ValidationError("attribute " + spec.name + ": expected an integer");
      }
    }
  }
}

struct UserRow {
  std::string user_id;
  UserRecord record;
};

/// Reads `user_id,<attr>...`. Columns of filtered attributes are ignored;
/// columns the schema does not declare are an error.
inline std::vector<UserRow> parse_users_csv(std::istream& in, const UserSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::optional<std::size_t>> column_slot;
  std::size_t id_column = 0;
  bool have_header = false;
  std::vector<UserRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) detail::strip_bom(line);
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split_csv_line(view);
    if (!have_header) {
      bool found_id = false;
      std::vector<bool> covered(schema.attributes.size(), false);
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c] == "user_id") {
          id_column = c;
          found_id = true;
          column_slot.emplace_back();
        } else if (auto idx = schema.index_of(fields[c])) {
          covered[*idx] = true;
          column_slot.emplace_back(*idx);
        } else if (std::find(schema.filtered.begin(), schema.filtered.end(), fields[c]) != schema.filtered.end()) {
          column_slot.emplace_back();
        } else {
          throw ParseError("column '" + std::string(fields[c]) + "' is not declared in the schema", line_no);
        }
      }
      if (!found_id) throw ParseError("missing user_id column", line_no);
      for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i]) throw ParseError("missing column " + schema.attributes[i].name, line_no);
      have_header = true;
      continue;
    }
    if (fields.size() != column_slot.size()) throw ParseError("wrong number of fields", line_no);
    UserRow row;
    row.user_id = std::string(fields[id_column]);
    row.record.schema_id = schema.schema_id;
    row.record.values.resize(schema.attributes.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!column_slot[c]) continue;
      const std::size_t idx = *column_slot[c];
      if (schema.attributes[idx].type == AttributeType::Categorical) {
        row.record.values[idx] = std::string(fields[c]);
      } else {
        const auto v = parse_double(fields[c]);
        if (!v) throw ParseError("bad number '" + std::string(fields[c]) + "'", line_no);
        row.record.values[idx] = *v;
      }
    }
    try {
      validate(row.record, schema);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("missing header", 1);
  return rows;
}

inline std::vector<UserRow> parse_users_csv(const std::filesystem::path& path, const UserSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open users file " + path.string());
  return parse_users_csv(in, schema);
}

struct UserSampleOptions {
  /// Integer attributes move by a uniform offset in [-jitter, +jitter].
  int integer_jitter = 1;
};

/// Bootstrap draw of a whole row, then integer jitter.
inline UserRecord sample_user(std::span<const UserRecord> pool, const UserSchema& schema, Rng& rng,
                              const UserSampleOptions& options = {}) {
  if (pool.empty()) throw ArgumentError("sample_user: empty pool");
  UserRecord r = pool[rng.below(pool.size())];
  if (options.integer_jitter > 0) {
    const auto span = static_cast<std::uint64_t>(2 * options.integer_jitter + 1);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (schema.attributes[i].type != AttributeType::Integer) continue;
      const auto offset = static_cast<double>(static_cast<std::int64_t>(rng.below(span)) - options.integer_jitter);
      std::get<double>(r.values[i]) += offset;
    }
  }
  return r;
}

/// Numeric attributes are centred and scaled; categorical attributes are
/// one-hot over all declared levels.
struct FeatureEncoder {
  UserSchema schema;
  std::vector<double> center;  // per attribute; unused for categorical
  std::vector<double> scale;

  [[nodiscard]] std::size_t width() const {
    std::size_t w = 0;
    for (const auto& a : schema.attributes) w += a.type == AttributeType::Categorical ? a.levels.size() : 1;
    return w;
  }

  static FeatureEncoder fit(const UserSchema& schema, std::span<const UserRecord> records) {
    FeatureEncoder enc{schema, std::vector<double>(schema.attributes.size(), 0.0),
                       std::vector<double>(schema.attributes.size(), 1.0)};
    if (records.empty()) return enc;
    for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
      if (schema.attributes[i].type == AttributeType::Categorical) continue;
      double mean = 0.0;
      for (const auto& r : records) mean += std::get<double>(r.values[i]);
      mean /= static_cast<double>(records.size());
      double var = 0.0;
      for (const auto& r : records) {
        const double v = std::get<double>(r.values[i]) - mean;
        var += v * v;
      }
      const double sd = std::sqrt(var / static_cast<double>(records.size()));
      enc.center[i] = mean;
      enc.scale[i] = sd > 0.0 ? sd : 1.0;
    }
    return enc;
  }

  [[nodiscard]] std::vector<double> encode(const UserRecord& r) const {
    validate(r, schema);
    std::vector<double> x;
    x.reserve(width());
    for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
      const auto& a = schema.attributes[i];
      if (a.type == AttributeType::Categorical) {
        const auto& level = std::get<std::string>(r.values[i]);
        for (const auto& l : a.levels) x.push_back(l == level ? 1.0 : 0.0);
      } else {
        x.push_back((std::get<double>(r.values[i]) - center[i]) / scale[i]);
      }
    }
    return x;
  }

  [[nodiscard]] UserRecord decode(std::span<const double> x) const {
    if (x.size() != width()) throw ArgumentError("decode: wrong feature width");
    UserRecord r{schema.schema_id, {}};
    std::size_t k = 0;
    for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
      const auto& a = schema.attributes[i];
      if (a.type == AttributeType::Categorical) {
        const auto it = std::max_element(x.begin() + static_cast<std::ptrdiff_t>(k),
                                         x.begin() + static_cast<std::ptrdiff_t>(k + a.levels.size()));
        r.values.emplace_back(a.levels[static_cast<std::size_t>(it - (x.begin() + static_cast<std::ptrdiff_t>(k)))]);
        k += a.levels.size();
      } else {
        double v = x[k++] * scale[i] + center[i];
        if (a.type == AttributeType::Integer) v = std::round(v);
        r.values.emplace_back(v);
      }
    }
    return r;
  }

  friend bool operator==(const FeatureEncoder&, const FeatureEncoder&) = default;
};

/// Mean negative log-likelihood of a binary logit plus (lambda/2)|beta|^2
/// over the non-intercept coefficients. beta[0] is the intercept.
struct BinaryLogitProblem {
  std::vector<std::vector<double>> x;  // encoded rows, without the intercept column
  std::vector<double> y;               // 0 or 1
  double lambda = 1e-3;

  [[nodiscard]] double linear(std::span<const double> beta, std::size_t i) const {
    double z = beta[0];
    for (std::size_t j = 0; j < x[i].size(); ++j) z += beta[j + 1] * x[i][j];
    return z;
  }

  [[nodiscard]] double objective(std::span<const double> beta) const {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = linear(beta, i);
      // log(1 + e^z) computed without overflow.
      const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      f += softplus - y[i] * z;
    }
    f /= static_cast<double>(x.size());
    double reg = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) reg += beta[j] * beta[j];
    return f + 0.5 * lambda * reg;
  }

  [[nodiscard]] std::vector<double> gradient(std::span<const double> beta) const {
    std::vector<double> g(beta.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = linear(beta, i);
      const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      const double r = p - y[i];
      g[0] += r;
      for (std::size_t j = 0; j < x[i].size(); ++j) g[j + 1] += r * x[i][j];
    }
    for (double& v : g) v /= static_cast<double>(x.size());
    for (std::size_t j = 1; j < beta.size(); ++j) g[j] += lambda * beta[j];
    return g;
  }

  /// Smoothness bound 0.25 * mean |[1, x_i]|^2 + lambda.
  [[nodiscard]] double lipschitz_bound() const {
    double acc = 0.0;
    for (const auto& row : x) {
      double s = 1.0;
      for (double v : row) s += v * v;
      acc += s;
    }
    return 0.25 * acc / static_cast<double>(x.size()) + lambda;
  }
};

struct LogitOptions {
  double lambda = 1e-3;
  std::size_t max_iters = 10000;
  double tolerance = 1e-8;  // on the gradient max-norm
  bool record_trace = false;
};

struct BinaryLogitFit {
  std::vector<double> beta;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> trace;  // objective per iteration when requested
};

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Full-batch gradient descent from zero. The step starts from the
/// Barzilai-Borwein estimate and is halved until the Armijo condition
/// holds, never going below 1/L, so the objective never increases.
inline BinaryLogitFit fit_binary_logit(const BinaryLogitProblem& problem, const LogitOptions& options = {}) {
  const std::size_t width = (problem.x.empty() ? 0 : problem.x.front().size()) + 1;
  BinaryLogitFit fit;
  fit.beta.assign(width, 0.0);
  const double min_step = 1.0 / problem.lipschitz_bound();
  double f = problem.objective(fit.beta);
  auto g = problem.gradient(fit.beta);
  std::vector<double> prev_beta, prev_g;
  if (options.record_trace) fit.trace.push_back(f);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    if (max_abs(g) < options.tolerance) {
      fit.converged = true;
      break;
    }
    double step = min_step;
    if (!prev_beta.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        const double s = fit.beta[j] - prev_beta[j];
        const double yv = g[j] - prev_g[j];
        ss += s * s;
        sy += s * yv;
      }
      if (sy > 0.0) step = std::clamp(ss / sy, min_step, 1e6 * min_step);
    }
    double gg = 0.0;
    for (double v : g) gg += v * v;
    std::vector<double> candidate(width);
    double f_new = 0.0;
    while (true) {
      for (std::size_t j = 0; j < width; ++j) candidate[j] = fit.beta[j] - step * g[j];
      f_new = problem.objective(candidate);
      if (f_new <= f - 0.5 * step * gg || step <= min_step) break;
      step = std::max(step * 0.5, min_step);
    }
    prev_beta = fit.beta;
    prev_g = g;
    fit.beta = std::move(candidate);
    candidate.assign(width, 0.0);
    f = f_new;
    g = problem.gradient(fit.beta);
    fit.iterations = iter + 1;
    if (options.record_trace) fit.trace.push_back(f);
  }
  if (!fit.converged && max_abs(g) < options.tolerance) fit.converged = true;
  fit.objective = f;
  return fit;
}

/// One-vs-rest binary logits, one per yearly pattern.
struct LogitModel {
  FeatureEncoder encoder;
  std::vector<std::size_t> labels;                // yearly pattern ids, ascending
  std::vector<std::vector<double>> coefficients;  // per label: intercept then encoded features
  std::vector<std::string> warnings;

  [[nodiscard]] std::vector<double> scores(const UserRecord& user) const {
    const auto x = encoder.encode(user);
    std::vector<double> s;
    s.reserve(labels.size());
    for (const auto& beta : coefficients) {
      double z = beta[0];
      for (std::size_t j = 0; j < x.size(); ++j) z += beta[j + 1] * x[j];
      s.push_back(z);
    }
    return s;
  }
  friend bool operator==(const LogitModel&, const LogitModel&) = default;
};

inline LogitModel fit_logit(const UserSchema& schema, std::span<const UserRecord> users,
                            std::span<const std::size_t> labels, const LogitOptions& options = {}) {
  if (users.size() != labels.size()) throw ArgumentError("fit_logit: one label per user required");
  std::set<std::size_t> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ArgumentError("fit_logit: need at least two distinct yearly patterns");

  LogitModel model;
  model.encoder = FeatureEncoder::fit(schema, users);
  model.labels.assign(distinct.begin(), distinct.end());
  BinaryLogitProblem problem;
  problem.lambda = options.lambda;
  for (const auto& u : users) problem.x.push_back(model.encoder.encode(u));
  for (std::size_t k : model.labels) {
    problem.y.clear();
    for (std::size_t l : labels) problem.y.push_back(l == k ? 1.0 : 0.0);
    auto fit = fit_binary_logit(problem, options);
    if (!fit.converged) {
      model.warnings.push_back("pattern " + std::to_string(k) + ": iteration cap reached" +
                               (options.lambda == 0.0 ? " (data may be separable; coefficients capped)" : ""));
    } else if (options.lambda == 0.0) {
      // Without a penalty a perfect training fit means the optimum is at infinity.
      bool separated = true;
      for (std::size_t i = 0; i < problem.x.size() && separated; ++i)
        separated = (problem.linear(fit.beta, i) > 0.0) == (problem.y[i] == 1.0);
      if (separated) {
        model.warnings.push_back("pattern " + std::to_string(k) +
                                 ": data are separable; coefficients are limited only by the stopping rule");
      }
    }
    model.coefficients.push_back(std::move(fit.beta));
  }
  return model;
}

enum class AssignMode { Argmax, Sample };

inline std::size_t assign_pattern(const UserRecord& user, const LogitModel& model, AssignMode mode, Rng& rng) {
  const auto s = model.scores(user);
  if (mode == AssignMode::Argmax) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s[k] > s[best]) best = k;
    return model.labels[best];
  }
  const double top = *std::max_element(s.begin(), s.end());
  std::vector<double> w;
  w.reserve(s.size());
  for (double v : s) w.push_back(std::exp(v - top));
  return model.labels[rng.categorical(w)];
}

inline std::size_t assign_pattern(const UserRecord& user, const LogitModel& model, AssignMode mode,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return assign_pattern(user, model, mode, rng);
}

/// Writes rows in the layout parse_users_csv reads.
inline void write_users_csv(std::ostream& out, std::span<const UserRow> rows, const UserSchema& schema) {
  out << "user_id";
  for (const auto& a : schema.attributes) out << ',' << a.name;
  out << '\n';
  for (const auto& r : rows) {
    out << r.user_id;
    for (const auto& v : r.record.values) {
      out << ',';
      if (const auto* d = std::get_if<double>(&v)) out << format_double(*d);
      else out << std::get<std::string>(v);
    }
    out << '\n';
  }
}

}  // namespace loadsynth
