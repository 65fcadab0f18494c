// Train on a generated two-behaviour corpus, synthesize a few years and
// compare them with the training data.

#include <iostream>

#include <loadsynth/fixtures.hpp>
#include <loadsynth/loadsynth.hpp>

int main() {
  using namespace loadsynth;

  const auto corpus = fixtures::two_behavior_corpus();
  TrainConfig config;
  config.k_initial = 1;
  const auto model = train_hmmc(corpus.profiles, config);
  std::cout << model.year_catalog.size() << " yearly, " << model.week_catalog.size() << " weekly, "
            << model.day_catalog.size() << " daily patterns\n";

  for (std::size_t y = 0; y < model.year_catalog.size(); ++y) {
    std::vector<std::vector<double>> raw;
    for (std::size_t m : model.year_catalog.patterns[y].members) raw.push_back(corpus.profiles[m].values);

    SynthesisRequest request;
    request.count = 20;
    request.seed = 42;
    request.yearly_pattern = y;
    std::vector<std::vector<double>> synth;
    for (auto& p : synthesize_year(model, request)) synth.push_back(std::move(p.values));

    std::cout << "\nyearly pattern " << y << '\n';
    write_comparison_table(std::cout, compare_reports(compute_metrics(raw), compute_metrics(synth)));
  }
}
