#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "hmmc.hpp"
#include "sha256.hpp"
#include "timestamp.hpp"
#include "user_model.hpp"

// Model files are JSON. Every real number is written as the shortest
// decimal string that parses back to the same double, so a save/load
// round trip is bit-exact. The checksum is the SHA-256 of the compact,
// key-sorted dump of the document without its "checksum" member.

namespace loadsynth {

using nlohmann::json;

namespace io {

inline json put_real(double v) { return format_double(v); }

inline double get_real(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  const auto v = parse_double(s);
  if (!v) throw ModelFormatError("bad real '" + s + "'");
  return *v;
}

inline json put_reals(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(put_real(x));
  return a;
}

inline std::vector<double> get_reals(const json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(get_real(x));
  return v;
}

inline json to_json(const Distribution& d) { return {{"states", d.states}, {"p", put_reals(d.probs)}}; }

inline Distribution distribution_from(const json& j) {
  Distribution d;
  d.states = j.at("states").get<std::vector<State>>();
  d.probs = get_reals(j.at("p"));
  if (d.states.size() != d.probs.size()) throw ModelFormatError("distribution arrays differ in length");
  return d;
}

inline json to_json(const MmcModel& m) {
  json tables = json::array();
  for (const auto& table : m.tables) {
    json rows = json::array();
    for (const auto& [ctx, d] : table) rows.push_back({{"ctx", ctx}, {"next", d.states}, {"p", put_reals(d.probs)}});
    tables.push_back(std::move(rows));
  }
  return {{"order", m.order},       {"length", m.length}, {"n_states", m.n_states},
          {"initial", to_json(m.initial)}, {"tables", std::move(tables)}};
}

inline MmcModel mmc_from(const json& j) {
  MmcModel m;
  m.order = j.at("order").get<std::size_t>();
  m.length = j.at("length").get<std::size_t>();
  m.n_states = j.at("n_states").get<std::size_t>();
  m.initial = distribution_from(j.at("initial"));
  for (const auto& rows : j.at("tables")) {
    TransitionTable table;
    for (const auto& row : rows) {
      Distribution d;
      d.states = row.at("next").get<std::vector<State>>();
      d.probs = get_reals(row.at("p"));
      if (d.states.size() != d.probs.size()) throw ModelFormatError("transition row arrays differ in length");
      table.emplace(row.at("ctx").get<Context>(), std::move(d));
    }
    m.tables.push_back(std::move(table));
  }
  return m;
}

inline json to_json(const ClassicMarkovModel& m) {
  json rows = json::array();
  for (const auto& [from, d] : m.rows) rows.push_back({{"from", from}, {"next", d.states}, {"p", put_reals(d.probs)}});
  return {{"n_states", m.n_states}, {"initial", to_json(m.initial)}, {"rows", std::move(rows)}};
}

inline ClassicMarkovModel classic_from(const json& j) {
  ClassicMarkovModel m;
  m.n_states = j.at("n_states").get<std::size_t>();
  m.initial = distribution_from(j.at("initial"));
  for (const auto& row : j.at("rows")) {
    Distribution d;
    d.states = row.at("next").get<std::vector<State>>();
    d.probs = get_reals(row.at("p"));
    m.rows.emplace(row.at("from").get<State>(), std::move(d));
  }
  return m;
}

inline json to_json(const Quantizer& q) {
  return {{"edges", put_reals(q.edges)}, {"representatives", put_reals(q.representatives)}};
}

inline Quantizer quantizer_from(const json& j) {
  Quantizer q;
  q.edges = get_reals(j.at("edges"));
  q.representatives = get_reals(j.at("representatives"));
  if (q.representatives.size() != q.edges.size() + 1) throw ModelFormatError("quantizer arrays inconsistent");
  return q;
}

inline json to_json(const PatternCatalog& c) {
  json patterns = json::array();
  for (const auto& p : c.patterns) {
    patterns.push_back({{"id", p.id}, {"centroid", put_reals(p.centroid)}, {"members", p.members}});
  }
  json refs = json::array();
  for (const auto& r : c.segment_refs) refs.push_back(json::array({r.user, r.ordinal}));
  return {{"scale", std::string(scale_name(c.scale))},
          {"gamma", put_real(c.gamma)},
          {"hit_k_max", c.hit_k_max},
          {"rounds", c.rounds},
          {"patterns", std::move(patterns)},
          {"segment_refs", std::move(refs)}};
}

/// Version 1 catalogs carry neither hit_k_max nor rounds.
inline PatternCatalog catalog_from(const json& j, int version) {
  PatternCatalog c;
  c.scale = parse_scale(j.at("scale").get<std::string>());
  c.gamma = get_real(j.at("gamma"));
  if (version >= 2) {
    c.hit_k_max = j.at("hit_k_max").get<bool>();
    c.rounds = j.at("rounds").get<std::size_t>();
  }
  for (const auto& pj : j.at("patterns")) {
    Pattern p;
    p.id = pj.at("id").get<std::size_t>();
    p.scale = c.scale;
    p.centroid = get_reals(pj.at("centroid"));
    p.members = pj.at("members").get<std::vector<std::size_t>>();
    if (p.id != c.patterns.size()) throw ModelFormatError("pattern ids must be dense and ordered");
    c.patterns.push_back(std::move(p));
  }
  for (const auto& r : j.at("segment_refs")) c.segment_refs.push_back({r.at(0).get<std::string>(), r.at(1).get<std::size_t>()});
  return c;
}

inline std::string canonical_payload(const json& doc) {
  json copy = doc;
  copy.erase("checksum");
  return copy.dump();
}

inline void seal(json& doc) { doc["checksum"] = sha256_hex(canonical_payload(doc)); }

inline json read_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ModelFormatError(path.string() + ": not a complete JSON document (" + e.what() + ")");
  }
  if (!doc.is_object() || !doc.contains("checksum") || !doc.contains("format_version")) {
    throw ModelFormatError(path.string() + ": missing format_version or checksum");
  }
  const auto expected = doc.at("checksum").get<std::string>();
  const auto actual = sha256_hex(canonical_payload(doc));
  if (expected != actual) {
    throw ModelFormatError(path.string() + ": checksum mismatch (stored " + expected + ", computed " + actual + ")");
  }
  return doc;
}

inline void write_document(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline json provenance_json(const std::map<std::string, std::string>& p, int interval_minutes) {
  json j = p;
  j["interval_minutes"] = std::to_string(interval_minutes);
  return j;
}

inline int interval_from_provenance(const json& p) {
  const auto s = p.at("interval_minutes").get<std::string>();
  return std::stoi(s);
}

}  // namespace io

inline json model_to_json(const HmmcModel& m) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["catalogs"] = {{"day", io::to_json(m.day_catalog)},
                     {"week", io::to_json(m.week_catalog)},
                     {"year", io::to_json(m.year_catalog)}};
  json daily = json::array();
  for (std::size_t i = 0; i < m.daily.size(); ++i) {
    daily.push_back({{"pattern_id", i}, {"quantizer", io::to_json(m.daily[i].quantizer)}, {"chain", io::to_json(m.daily[i].chain)}});
  }
  json weekly = json::array();
  for (std::size_t i = 0; i < m.weekly.size(); ++i) weekly.push_back({{"pattern_id", i}, {"chain", io::to_json(m.weekly[i])}});
  json yearly = json::array();
  for (std::size_t i = 0; i < m.yearly.size(); ++i) yearly.push_back({{"pattern_id", i}, {"chain", io::to_json(m.yearly[i])}});
  doc["daily_models"] = std::move(daily);
  doc["weekly_models"] = std::move(weekly);
  doc["yearly_models"] = std::move(yearly);
  doc["prior"] = io::put_reals(m.prior);
  doc["provenance"] = io::provenance_json(m.provenance, m.interval_minutes);
  io::seal(doc);
  return doc;
}

/// Accepts format versions 1 and 2. Version 1 stored the prior as an
/// object keyed by pattern id and had no clustering diagnostics.
inline HmmcModel model_from_json(const json& doc) {
  HmmcModel m;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version < 1 || version > kModelFormatVersion) {
      throw ModelFormatError("unsupported model format_version " + std::to_string(version) + " (this reader knows 1.." +
                             std::to_string(kModelFormatVersion) + ")");
    }
    m.format_version = kModelFormatVersion;
    const auto& cat = doc.at("catalogs");
    m.day_catalog = io::catalog_from(cat.at("day"), version);
    m.week_catalog = io::catalog_from(cat.at("week"), version);
    m.year_catalog = io::catalog_from(cat.at("year"), version);
    for (const auto& d : doc.at("daily_models")) {
      m.daily.push_back({io::quantizer_from(d.at("quantizer")), io::mmc_from(d.at("chain"))});
    }
    for (const auto& w : doc.at("weekly_models")) m.weekly.push_back(io::mmc_from(w.at("chain")));
    for (const auto& y : doc.at("yearly_models")) m.yearly.push_back(io::mmc_from(y.at("chain")));
    if (version == 1) {
      const auto& prior = doc.at("prior");
      m.prior.assign(prior.size(), 0.0);
      for (const auto& [key, value] : prior.items()) {
        const auto id = static_cast<std::size_t>(std::stoul(key));
        if (id >= m.prior.size()) throw ModelFormatError("prior key out of range");
        m.prior[id] = io::get_real(value);
      }
    } else {
      m.prior = io::get_reals(doc.at("prior"));
    }
    const auto& prov = doc.at("provenance");
    m.interval_minutes = io::interval_from_provenance(prov);
    for (const auto& [key, value] : prov.items())
      if (key != "interval_minutes") m.provenance[key] = value.get<std::string>();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
  try {
    validate(m);
  } catch (const ValidationError& e) {
    throw ModelFormatError(std::string("invalid model: ") + e.what());
  }
  return m;
}

inline void save_model(const HmmcModel& m, const std::filesystem::path& path) {
  io::write_document(model_to_json(m), path);
}

inline HmmcModel load_model(const std::filesystem::path& path) { return model_from_json(io::read_document(path)); }

// Baseline file: format_version, kind, patterns, prior, provenance, checksum.

inline json baseline_to_json(const BaselineModel& b) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "classic_baseline";
  json patterns = json::array();
  for (std::size_t i = 0; i < b.patterns.size(); ++i) {
    const auto& p = b.patterns[i];
    json pj = {{"pattern_id", i}, {"members", p.members}};
    if (p.members > 0) {
      pj["quantizer"] = io::to_json(p.quantizer);
      pj["chain"] = io::to_json(p.chain);
    }
    patterns.push_back(std::move(pj));
  }
  doc["patterns"] = std::move(patterns);
  doc["prior"] = io::put_reals(b.prior);
  doc["provenance"] = io::provenance_json(b.provenance, b.interval_minutes);
  io::seal(doc);
  return doc;
}

inline BaselineModel baseline_from_json(const json& doc) {
  BaselineModel b;
  try {
    if (doc.value("kind", std::string()) != "classic_baseline") throw ModelFormatError("not a baseline model file");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported baseline format_version " + std::to_string(version));
    }
    for (const auto& pj : doc.at("patterns")) {
      BaselinePattern p;
      p.members = pj.at("members").get<std::size_t>();
      if (p.members > 0) {
        p.quantizer = io::quantizer_from(pj.at("quantizer"));
        p.chain = io::classic_from(pj.at("chain"));
      }
      b.patterns.push_back(std::move(p));
    }
    b.prior = io::get_reals(doc.at("prior"));
    const auto& prov = doc.at("provenance");
    b.interval_minutes = io::interval_from_provenance(prov);
    for (const auto& [key, value] : prov.items())
      if (key != "interval_minutes") b.provenance[key] = value.get<std::string>();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed baseline: ") + e.what());
  }
  if (b.prior.size() != b.patterns.size()) throw ModelFormatError("baseline prior/pattern count mismatch");
  return b;
}

inline void save_baseline(const BaselineModel& b, const std::filesystem::path& path) {
  io::write_document(baseline_to_json(b), path);
}

inline BaselineModel load_baseline(const std::filesystem::path& path) {
  return baseline_from_json(io::read_document(path));
}

// User model file: the filtered schema, the bootstrap pool and the logits.

struct UserModel {
  UserSchema schema;
  std::vector<UserRecord> pool;
  LogitModel logit;
  friend bool operator==(const UserModel&, const UserModel&) = default;
};

namespace io {

inline json to_json(const UserSchema& s) {
  json attrs = json::array();
  for (const auto& a : s.attributes) {
    json aj = {{"name", a.name}, {"type", std::string(attribute_type_name(a.type))}};
    if (a.type == AttributeType::Categorical) aj["levels"] = a.levels;
    attrs.push_back(std::move(aj));
  }
  return {{"schema_id", s.schema_id}, {"attributes", std::move(attrs)}, {"filtered", s.filtered}};
}

inline UserSchema schema_from(const json& j) {
  UserSchema s;
  s.schema_id = j.at("schema_id").get<std::string>();
  for (const auto& aj : j.at("attributes")) {
    AttributeSpec a;
    a.name = aj.at("name").get<std::string>();
    a.type = parse_attribute_type(aj.at("type").get<std::string>());
    if (a.type == AttributeType::Categorical) a.levels = aj.at("levels").get<std::vector<std::string>>();
    s.attributes.push_back(std::move(a));
  }
  s.filtered = j.at("filtered").get<std::vector<std::string>>();
  return s;
}

inline json to_json(const UserRecord& r) {
  json values = json::array();
  for (const auto& v : r.values) {
    if (const auto* d = std::get_if<double>(&v)) {
      values.push_back({{"num", put_real(*d)}});
    } else {
      values.push_back({{"level", std::get<std::string>(v)}});
    }
  }
  return values;
}

inline UserRecord record_from(const json& j, const std::string& schema_id) {
  UserRecord r{schema_id, {}};
  for (const auto& v : j) {
    if (v.contains("num")) {
      r.values.emplace_back(get_real(v.at("num")));
    } else {
      r.values.emplace_back(v.at("level").get<std::string>());
    }
  }
  return r;
}

}  // namespace io

inline json user_model_to_json(const UserModel& u) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "user_model";
  doc["schema"] = io::to_json(u.schema);
  json pool = json::array();
  for (const auto& r : u.pool) pool.push_back(io::to_json(r));
  doc["pool"] = std::move(pool);
  json coefs = json::array();
  for (const auto& c : u.logit.coefficients) coefs.push_back(io::put_reals(c));
  doc["logit"] = {{"labels", u.logit.labels},
                  {"coefficients", std::move(coefs)},
                  {"center", io::put_reals(u.logit.encoder.center)},
                  {"scale", io::put_reals(u.logit.encoder.scale)},
                  {"warnings", u.logit.warnings}};
  io::seal(doc);
  return doc;
}

inline UserModel user_model_from_json(const json& doc) {
  UserModel u;
  try {
    if (doc.value("kind", std::string()) != "user_model") throw ModelFormatError("not a user model file");
    if (doc.at("format_version").get<int>() != kModelFormatVersion) throw ModelFormatError("unsupported user model version");
    u.schema = io::schema_from(doc.at("schema"));
    for (const auto& r : doc.at("pool")) u.pool.push_back(io::record_from(r, u.schema.schema_id));
    const auto& lj = doc.at("logit");
    u.logit.encoder.schema = u.schema;
    u.logit.encoder.center = io::get_reals(lj.at("center"));
    u.logit.encoder.scale = io::get_reals(lj.at("scale"));
    u.logit.labels = lj.at("labels").get<std::vector<std::size_t>>();
    for (const auto& c : lj.at("coefficients")) u.logit.coefficients.push_back(io::get_reals(c));
    u.logit.warnings = lj.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed user model: ") + e.what());
  }
  for (const auto& r : u.pool) validate(r, u.schema);
  return u;
}

inline void save_user_model(const UserModel& u, const std::filesystem::path& path) {
  io::write_document(user_model_to_json(u), path);
}

inline UserModel load_user_model(const std::filesystem::path& path) {
  return user_model_from_json(io::read_document(path));
}

}  // namespace loadsynth
