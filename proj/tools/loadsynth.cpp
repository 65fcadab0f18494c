// loadsynth: train, synthesize and evaluate hierarchical load-profile models.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 model file, 4 data shape.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <loadsynth/loadsynth.hpp>

namespace ls = loadsynth;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kModel = 3, kShape = 4 };

std::filesystem::path users_sidecar(const std::filesystem::path& model) {
  auto p = model;
  p += ".users.json";
  return p;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ls::IoError("cannot write " + path);
  return out;
}

void print_catalog(const ls::PatternCatalog& c) {
  std::cout << "  " << ls::scale_name(c.scale) << ": " << c.size() << " patterns from " << c.segment_refs.size()
            << " segments in " << c.rounds << " rounds" << (c.hit_k_max ? " (stopped at k_max)" : "") << '\n';
}

ls::IngestResult ingest(const std::string& path, const ls::RunConfig& cfg) {
  auto result = ls::parse_csv(path, cfg.ingest_options());
  for (const auto& e : result.excluded) std::cerr << "excluded " << e.user_id << ": " << e.reason << '\n';
  return result;
}

struct TrainArgs {
  std::string config_path;
  std::string input;
  std::string model;
  std::string users;
  std::string schema;
  std::string allowlist;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

ls::RunConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                             const std::optional<std::size_t>& threads) {
  ls::RunConfig cfg = path.empty() ? ls::RunConfig{} : ls::load_config(path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  ls::validate(cfg);
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  auto cfg = resolve_config(a.config_path, a.seed, a.threads);
  if (!a.input.empty()) cfg.input_csv = a.input;
  if (!a.model.empty()) cfg.model_path = a.model;
  if (!a.users.empty()) cfg.users_csv = a.users;
  if (!a.schema.empty()) cfg.schema_path = a.schema;
  if (!a.allowlist.empty()) cfg.allowlist_path = a.allowlist;
  if (cfg.input_csv.empty()) throw ls::ArgumentError("train: no input CSV (--input or input_csv)");
  if (cfg.model_path.empty()) throw ls::ArgumentError("train: no model path (--model or model)");

  const auto data = ingest(cfg.input_csv, cfg);
  if (data.profiles.empty()) throw ls::ValidationError("no usable profiles in " + cfg.input_csv);
  auto model = ls::train_hmmc(data.profiles, cfg.train_config());
  model.provenance["config"] = ls::config_snapshot(cfg);
  model.provenance["profiles_users"] = std::to_string(data.profiles.size());
  model.provenance["profiles_excluded"] = std::to_string(data.excluded.size());
  ls::save_model(model, cfg.model_path);

  std::cout << "trained " << cfg.model_path << " from " << data.profiles.size() << " users\n";
  print_catalog(model.year_catalog);
  print_catalog(model.week_catalog);
  print_catalog(model.day_catalog);

  if (!cfg.users_csv.empty()) {
    if (cfg.schema_path.empty()) throw ls::ArgumentError("train: --users needs --schema");
    std::optional<std::filesystem::path> allow;
    if (!cfg.allowlist_path.empty()) allow = cfg.allowlist_path;
    ls::UserModel um;
    um.schema = ls::load_schema(cfg.schema_path, allow);
    const auto rows = ls::parse_users_csv(cfg.users_csv, um.schema);
    // Label each user with the yearly pattern of their first complete year.
    std::map<std::string, std::pair<std::size_t, std::size_t>> first_year;  // user -> (ordinal, pattern)
    for (const auto& p : model.year_catalog.patterns) {
      for (std::size_t m : p.members) {
        const auto& ref = model.year_catalog.segment_refs[m];
        auto [it, fresh] = first_year.try_emplace(ref.user, ref.ordinal, p.id);
        if (!fresh && ref.ordinal < it->second.first) it->second = {ref.ordinal, p.id};
      }
    }
    std::vector<ls::UserRecord> records;
    std::vector<std::size_t> labels;
    for (const auto& r : rows) {
      um.pool.push_back(r.record);
      if (auto it = first_year.find(r.user_id); it != first_year.end()) {
        records.push_back(r.record);
        labels.push_back(it->second.second);
      }
    }
    um.logit = ls::fit_logit(um.schema, records, labels, cfg.logit_options());
    for (const auto& w : um.logit.warnings) std::cerr << "warning: " << w << '\n';
    ls::save_user_model(um, users_sidecar(cfg.model_path));
    std::cout << "  user model: " << records.size() << " labelled users, " << um.pool.size() << " in pool, "
              << um.schema.filtered.size() << " attributes filtered\n";
  }
  return kOk;
}

struct SynthArgs {
  std::string model;
  std::string out;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> pattern;
  bool users = false;
  std::string assign = "sample";
  std::string start;
  std::optional<std::size_t> threads;
  std::string users_out;
};

ls::Timestamp parse_start(const std::string& s) {
  if (s.empty()) return ls::kDefaultSynthesisStart;
  const auto t = ls::parse_timestamp(s);
  if (!t) throw ls::ArgumentError("bad --start '" + s + "'");
  return *t;
}

int cmd_synth(const SynthArgs& a) {
  const auto model = ls::load_model(a.model);
  ls::SynthesisRequest req;
  req.count = a.count;
  req.seed = a.seed;
  req.yearly_pattern = a.pattern;
  req.start = parse_start(a.start);
  req.threads = a.threads ? *a.threads : ls::default_threads();
  if (a.users) {
    if (a.pattern) throw ls::ArgumentError("synth: --pattern and --users are exclusive");
    const auto um = ls::load_user_model(users_sidecar(a.model));
    const auto mode = a.assign == "argmax" ? ls::AssignMode::Argmax : ls::AssignMode::Sample;
    ls::Rng rng(ls::derive_seed(a.seed, 0xA775ull));
    std::vector<ls::UserRow> generated;
    for (std::size_t i = 0; i < a.count; ++i) {
      auto rec = ls::sample_user(um.pool, um.schema, rng);
      req.yearly_patterns.push_back(ls::assign_pattern(rec, um.logit, mode, rng));
      generated.push_back({ls::detail::synthetic_user_id(req.user_prefix, i), std::move(rec)});
    }
    if (!a.users_out.empty()) {
      auto out = open_output(a.users_out);
      ls::write_users_csv(out, generated, um.schema);
    }
  }
  const auto profiles = ls::synthesize_year(model, req);
  auto out = open_output(a.out);
  ls::write_csv(out, profiles);
  if (!out) throw ls::IoError("write failed for " + a.out);
  std::cout << "wrote " << profiles.size() << " profiles x " << model.year_length() << " readings to " << a.out << '\n';
  return kOk;
}

struct EvalArgs {
  std::string raw;
  std::string synth;
  std::string group_by = "year";
  std::string format = "table";
  std::string norm = "l2";
  std::string config_path;
};

std::vector<ls::Segment> segments_at(const ls::IngestResult& data, ls::Scale scale, const ls::RunConfig& cfg) {
  ls::SegmentOptions opts;
  opts.anchor_weekday = cfg.anchor_weekday;
  const auto corpus = ls::build_corpus(data.profiles, opts);
  switch (scale) {
    case ls::Scale::Day: return corpus.days;
    case ls::Scale::Week: return corpus.weeks;
    case ls::Scale::Year: return corpus.years;
  }
  return {};
}

int cmd_eval(const EvalArgs& a) {
  auto cfg = resolve_config(a.config_path, std::nullopt, std::nullopt);
  const auto scale = ls::parse_scale(a.group_by);
  const auto raw = ingest(a.raw, cfg);
  const auto synth = ingest(a.synth, cfg);
  const auto raw_segs = segments_at(raw, scale, cfg);
  const auto synth_segs = segments_at(synth, scale, cfg);
  if (raw_segs.empty() || synth_segs.empty()) {
    throw ls::ValidationError(std::string("no complete ") + std::string(ls::scale_name(scale)) +
                              " segments in " + (raw_segs.empty() ? a.raw : a.synth));
  }
  ls::MetricsOptions mopts;
  mopts.sigma_pro_norm = a.norm == "l1" ? ls::VarianceNorm::L1 : ls::VarianceNorm::L2;
  const auto rr = ls::compute_metrics(ls::segment_spans(raw_segs), mopts);
  const auto sr = ls::compute_metrics(ls::segment_spans(synth_segs), mopts);
  if (rr.d != sr.d) {
    throw ls::ValidationError("segment lengths differ (" + std::to_string(rr.d) + " vs " + std::to_string(sr.d) +
                              "); inputs use different sampling intervals");
  }
  const auto cmp = ls::compare_reports(rr, sr);
  if (a.format == "csv") {
    ls::write_comparison_csv(std::cout, cmp);
  } else {
    std::cout << "raw: " << rr.n_profiles << " " << ls::scale_name(scale) << " segments, synth: " << sr.n_profiles
              << '\n';
    ls::write_comparison_table(std::cout, cmp);
  }
  return kOk;
}

struct BaselineArgs {
  std::string model;
  std::string input;
  std::string baseline;
  std::string out;
  std::string config_path;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> pattern;
  std::string start;
  std::optional<std::size_t> threads;
};

int cmd_baseline_train(const BaselineArgs& a) {
  const auto cfg = resolve_config(a.config_path, std::nullopt, a.threads);
  const auto model = ls::load_model(a.model);
  const auto data = ingest(a.input, cfg);
  ls::SegmentOptions opts;
  opts.anchor_weekday = cfg.anchor_weekday;
  auto baseline = ls::train_baseline(model, data.profiles, cfg.n_bins, opts);
  baseline.provenance["config"] = ls::config_snapshot(cfg);
  ls::save_baseline(baseline, a.baseline);
  std::cout << "trained baseline " << a.baseline << " with " << baseline.patterns.size() << " yearly patterns\n";
  return kOk;
}

int cmd_baseline_synth(const BaselineArgs& a) {
  const auto baseline = ls::load_baseline(a.baseline);
  ls::SynthesisRequest req;
  req.count = a.count;
  req.seed = a.seed;
  req.yearly_pattern = a.pattern;
  req.start = parse_start(a.start);
  req.threads = a.threads ? *a.threads : ls::default_threads();
  const auto profiles = ls::synthesize_baseline_year(baseline, req);
  auto out = open_output(a.out);
  ls::write_csv(out, profiles);
  std::cout << "wrote " << profiles.size() << " baseline profiles to " << a.out << '\n';
  return kOk;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ls::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ls::ModelFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModel;
  } catch (const ls::ClosureViolation& e) {
    std::cerr << "error: model is not closed: " << e.what() << '\n';
    return kModel;
  } catch (const ls::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ls::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kShape;
  } catch (const ls::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kShape;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Markov-chain synthesis of electricity load profiles"};
  app.require_subcommand(1);
  std::function<int()> action;

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "cluster a corpus and train a model");
  train->add_option("--config", ta.config_path, "run configuration file");
  train->add_option("-i,--input", ta.input, "readings CSV (user_id,timestamp,kwh)");
  train->add_option("-m,--model", ta.model, "model file to write");
  train->add_option("--users", ta.users, "user attribute CSV");
  train->add_option("--schema", ta.schema, "user attribute schema (JSON)");
  train->add_option("--allowlist", ta.allowlist, "attribute allowlist file");
  train->add_option("--seed", ta.seed, "override the configured seed");
  train->add_option("--threads", ta.threads, "worker threads (default: LOADSYNTH_THREADS or 1)");
  train->callback([&] { action = [&] { return cmd_train(ta); }; });

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "synthesize yearly profiles from a model");
  synth->add_option("-m,--model", sa.model, "model file")->required();
  synth->add_option("-o,--out", sa.out, "output CSV")->required();
  synth->add_option("-n,--count", sa.count, "number of profiles")->check(CLI::PositiveNumber);
  synth->add_option("--seed", sa.seed, "random seed");
  synth->add_option("--pattern", sa.pattern, "fixed yearly pattern id");
  synth->add_flag("--users", sa.users, "draw users and assign patterns with the user model");
  synth->add_option("--assign", sa.assign, "pattern assignment with --users")->check(CLI::IsMember({"argmax", "sample"}));
  synth->add_option("--users-out", sa.users_out, "write the generated user attributes here");
  synth->add_option("--start", sa.start, "timestamp of the first reading (default 2015-01-01)");
  synth->add_option("--threads", sa.threads, "worker threads");
  synth->callback([&] { action = [&] { return cmd_synth(sa); }; });

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "compare raw and synthetic profiles");
  eval->add_option("--raw", ea.raw, "raw readings CSV")->required();
  eval->add_option("--synth", ea.synth, "synthetic readings CSV")->required();
  eval->add_option("--group-by", ea.group_by, "segment scale")->check(CLI::IsMember({"year", "week", "day"}));
  eval->add_option("--format", ea.format, "output format")->check(CLI::IsMember({"csv", "table"}));
  eval->add_option("--norm", ea.norm, "norm for sigma_pro")->check(CLI::IsMember({"l1", "l2"}));
  eval->add_option("--config", ea.config_path, "run configuration file");
  eval->callback([&] { action = [&] { return cmd_eval(ea); }; });

  BaselineArgs ba;
  auto* baseline = app.add_subcommand("baseline", "classic first-order Markov baseline");
  baseline->require_subcommand(1);
  auto* btrain = baseline->add_subcommand("train", "train one pooled chain per yearly pattern");
  btrain->add_option("-m,--model", ba.model, "trained model (for yearly pattern assignment)")->required();
  btrain->add_option("-i,--input", ba.input, "readings CSV")->required();
  btrain->add_option("-b,--baseline", ba.baseline, "baseline file to write")->required();
  btrain->add_option("--config", ba.config_path, "run configuration file");
  btrain->add_option("--threads", ba.threads, "worker threads");
  btrain->callback([&] { action = [&] { return cmd_baseline_train(ba); }; });
  auto* bsynth = baseline->add_subcommand("synth", "synthesize profiles from a baseline");
  bsynth->add_option("-b,--baseline", ba.baseline, "baseline file")->required();
  bsynth->add_option("-o,--out", ba.out, "output CSV")->required();
  bsynth->add_option("-n,--count", ba.count, "number of profiles")->check(CLI::PositiveNumber);
  bsynth->add_option("--seed", ba.seed, "random seed");
  bsynth->add_option("--pattern", ba.pattern, "fixed yearly pattern id");
  bsynth->add_option("--start", ba.start, "timestamp of the first reading");
  bsynth->add_option("--threads", ba.threads, "worker threads");
  bsynth->callback([&] { action = [&] { return cmd_baseline_synth(ba); }; });

  std::string show_path;
  auto* config = app.add_subcommand("config", "inspect run configuration");
  config->require_subcommand(1);
  auto* show = config->add_subcommand("show", "print the effective configuration");
  show->add_option("--config", show_path, "configuration file (defaults when omitted)");
  show->callback([&] {
    action = [&] {
      ls::write_config(std::cout, show_path.empty() ? ls::RunConfig{} : ls::load_config(show_path));
      return int{kOk};
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  return guarded(action);
}
