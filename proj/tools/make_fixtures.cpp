// Writes the bundled synthetic corpora as CSV, plus the household
// attribute files, into a directory.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <loadsynth/fixtures.hpp>
#include <loadsynth/loadsynth.hpp>

namespace ls = loadsynth;

int main(int argc, char** argv) {
  CLI::App app{"write fixture corpora"};
  std::string dir = ".";
  std::uint64_t seed = 7;
  app.add_option("-d,--dir", dir, "output directory");
  app.add_option("--seed", seed, "fixture seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    auto open = [&](const char* name) {
      std::ofstream out(root / name, std::ios::binary | std::ios::trunc);
      if (!out) throw ls::IoError("cannot write " + (root / name).string());
      return out;
    };

    ls::fixtures::TwoBehaviorOptions opts;
    opts.seed = seed;
    const auto corpus = ls::fixtures::two_behavior_corpus(opts);
    {
      auto out = open("two_behavior.csv");
      ls::write_csv(out, corpus.profiles);
    }
    {
      const std::vector<ls::LoadProfile> one{ls::fixtures::crossing_peaks_year(seed)};
      auto out = open("crossing_peaks.csv");
      ls::write_csv(out, one);
    }
    const auto schema_json = ls::fixtures::household_schema_json();
    {
      auto out = open("household_schema.json");
      out << schema_json.dump(2) << '\n';
    }
    {
      auto out = open("allowlist.txt");
      out << "# attributes that may leave the utility\n";
      for (const auto& a : schema_json.at("allowlist")) out << a.get<std::string>() << '\n';
    }
    const auto schema = ls::parse_schema(schema_json);
    {
      auto out = open("households.csv");
      ls::write_users_csv(out, ls::fixtures::household_users(corpus, schema, seed), schema);
    }
    {
      ls::RunConfig cfg;
      cfg.k_initial = 1;
      cfg.seed = seed;
      auto out = open("fixture.conf");
      out << "# settings for the two-behaviour corpus\n";
      ls::write_config(out, cfg);
    }
  } catch (const ls::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
