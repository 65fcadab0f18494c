#include <gtest/gtest.h>

#include <set>

#include <loadsynth/fixtures.hpp>
#include <loadsynth/hmmc.hpp>

#include "shared.hpp"

using namespace loadsynth;

namespace {

std::vector<double> round_trip_year(const HmmcModel& m, const LoadProfile& p) {
  const auto corpus = build_corpus(std::span(&p, 1));
  std::vector<double> out;
  for (const auto& day : corpus.days) {
    const auto& q = m.daily[assign_to_nearest(day.values, m.day_catalog)].quantizer;
    for (double v : day.values) out.push_back(q.dequantize(q.quantize(v)));
  }
  return out;
}

bool all_point_masses(const HmmcModel& m) {
  bool ok = true;
  auto check = [&](const Distribution& d) { ok = ok && d.states.size() == 1 && d.probs[0] == 1.0; };
  for (const auto& d : m.daily) for_each_distribution(d.chain, check);
  for (const auto& w : m.weekly) for_each_distribution(w, check);
  for (const auto& y : m.yearly) for_each_distribution(y, check);
  return ok;
}

}  // namespace

TEST(TrainHmmc, PeriodicYearIsDegenerate) {
  const std::vector<LoadProfile> one{fixtures::periodic_year()};
  const auto m = train_hmmc(one, TrainConfig{});
  EXPECT_EQ(m.year_catalog.size(), 1u);
  EXPECT_EQ(m.prior, std::vector<double>{1.0});
  EXPECT_TRUE(all_point_masses(m));
  const auto expected = round_trip_year(m, one[0]);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthesisRequest r;
    r.seed = seed;
    EXPECT_EQ(synthesize_year(m, r).at(0).values, expected);
  }
}

TEST(TrainHmmc, TableCountsPerLevel) {
  const auto& m = shared::two_behavior_model();
  EXPECT_NO_THROW(validate(m));
  for (const auto& d : m.daily) EXPECT_EQ(d.chain.tables.size(), 95u);
  for (const auto& w : m.weekly) EXPECT_EQ(w.tables.size(), 6u);
  for (const auto& y : m.yearly) EXPECT_EQ(y.tables.size(), 51u);
  for (const auto& w : m.weekly)
    for (const auto& s : w.initial.states) EXPECT_LT(s, m.day_catalog.size());
  for (const auto& y : m.yearly)
    for (const auto& s : y.initial.states) EXPECT_LT(s, m.week_catalog.size());
}

TEST(TrainHmmc, DuplicateProfilesGiveSameDistributions) {
  const auto base = fixtures::periodic_year();
  auto twin = base;
  twin.user_id = "periodic_twin";
  const std::vector<LoadProfile> one{base}, two{base, twin};
  const auto m1 = train_hmmc(one, TrainConfig{});
  const auto m2 = train_hmmc(two, TrainConfig{});
  // Centroids and quantile edges are means over twice the values, so they
  // agree only up to rounding; the transition distributions agree exactly.
  auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
    return true;
  };
  ASSERT_EQ(m1.daily.size(), m2.daily.size());
  for (std::size_t k = 0; k < m1.daily.size(); ++k) {
    EXPECT_EQ(m1.daily[k].chain, m2.daily[k].chain);
    EXPECT_TRUE(near(m1.daily[k].quantizer.edges, m2.daily[k].quantizer.edges));
    EXPECT_TRUE(near(m1.daily[k].quantizer.representatives, m2.daily[k].quantizer.representatives));
  }
  EXPECT_EQ(m1.weekly, m2.weekly);
  EXPECT_EQ(m1.yearly, m2.yearly);
  EXPECT_EQ(m1.prior, m2.prior);
  ASSERT_EQ(m1.day_catalog.size(), m2.day_catalog.size());
  for (std::size_t k = 0; k < m1.day_catalog.size(); ++k) {
    EXPECT_TRUE(near(m1.day_catalog.patterns[k].centroid, m2.day_catalog.patterns[k].centroid));
    EXPECT_EQ(2 * m1.day_catalog.patterns[k].members.size(), m2.day_catalog.patterns[k].members.size());
  }
}

TEST(TrainHmmc, RecoversGeneratingBehaviours) {
  const auto& corpus = shared::two_behavior();
  const auto& m = shared::two_behavior_model();
  ASSERT_EQ(m.year_catalog.size(), 2u);
  std::map<std::size_t, std::set<std::size_t>> behaviours_per_pattern;
  for (std::size_t u = 0; u < corpus.profiles.size(); ++u) {
    // brute-force nearest centroid
    const auto& y = corpus.profiles[u].values;
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < 2; ++k) {
      double d = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - m.year_catalog.patterns[k].centroid[i];
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    behaviours_per_pattern[best].insert(corpus.behavior[u]);
  }
  ASSERT_EQ(behaviours_per_pattern.size(), 2u);
  for (const auto& [k, b] : behaviours_per_pattern) EXPECT_EQ(b.size(), 1u) << "pattern " << k;
}

TEST(TrainHmmc, NoCompleteYearIsTrainingError) {
  LoadProfile p{"short", fixtures::kFixtureStart, 15, std::vector<double>(96 * 363, 1.0)};
  try {
    train_hmmc(std::span(&p, 1), TrainConfig{});
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("364"), std::string::npos);
  }
}

TEST(Synthesize, LengthRangeAndLabels) {
  const auto& m = shared::two_behavior_model();
  double max_rep = 0.0;
  for (const auto& d : m.daily) max_rep = std::max(max_rep, d.quantizer.representatives.back());
  SynthesisRequest r;
  r.count = 4;
  r.seed = 5;
  r.start = 1420070400;
  const auto out = synthesize_year(m, r);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].values.size(), 34944u);
    EXPECT_EQ(out[i].user_id, "synth_00000" + std::to_string(i));
    EXPECT_EQ(out[i].start, 1420070400);
    for (double v : out[i].values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, max_rep);
    }
  }
  EXPECT_EQ(out[3].timestamp_at(34943), 1420070400 + 34943 * 900);
}

TEST(Synthesize, DeterministicAcrossThreadCounts) {
  const auto& m = shared::two_behavior_model();
  SynthesisRequest r;
  r.count = 6;
  r.seed = 77;
  const auto a = synthesize_year(m, r);
  r.threads = 3;
  const auto b = synthesize_year(m, r);
  EXPECT_EQ(a, b);
  r.seed = 78;
  EXPECT_NE(synthesize_year(m, r), a);
}

TEST(Synthesize, ProfileIOnlyDependsOnItsSubSeed) {
  const auto& m = shared::two_behavior_model();
  SynthesisRequest r;
  r.count = 3;
  r.seed = 9;
  const auto three = synthesize_year(m, r);
  r.count = 1;
  EXPECT_EQ(synthesize_year(m, r)[0].values, three[0].values);
  EXPECT_EQ(derive_seed(9, 2), splitmix64(9 ^ splitmix64(2)));
}

TEST(Synthesize, SupportSoundAgainstMemberWeeks) {
  const auto& corpus_profiles = shared::two_behavior().profiles;
  const auto& m = shared::two_behavior_model();
  const auto corpus = build_corpus(corpus_profiles);
  for (std::size_t y = 0; y < m.year_catalog.size(); ++y) {
    // Daily patterns observed at each weekday position in member weeks.
    std::set<std::size_t> member_users;
    for (auto mem : m.year_catalog.patterns[y].members) member_users.insert(mem);
    std::vector<std::set<std::size_t>> observed(7);
    for (auto yi : member_users) {
      for (std::size_t w = 0; w < 52; ++w) {
        const std::size_t week = corpus.year_first_week[yi] + w;
        for (std::size_t d = 0; d < 7; ++d) {
          observed[d].insert(assign_to_nearest(corpus.days[corpus.week_first_day[week] + d].values, m.day_catalog));
        }
      }
    }
    SynthesisRequest r;
    r.count = 100;
    r.seed = 31 + y;
    r.yearly_pattern = y;
    const auto years = synthesize_year_detailed(m, r);
    const std::size_t ppd = m.day_length();
    std::size_t reassigned_outside = 0;
    for (const auto& sy : years) {
      ASSERT_EQ(sy.yearly_pattern, y);
      for (std::size_t day = 0; day < 364; ++day) {
        ASSERT_TRUE(observed[day % 7].count(sy.day_patterns[day])) << "generating id outside training support";
        const std::span<const double> values(sy.profile.values.data() + day * ppd, ppd);
        reassigned_outside += !observed[day % 7].count(assign_to_nearest(values, m.day_catalog));
      }
    }
    EXPECT_EQ(reassigned_outside, 0u) << "yearly pattern " << y;
  }
}

TEST(Synthesize, PriorPreservedChiSquare) {
  // Every profile draws its yearly pattern first from its own stream.
  const std::vector<double> prior{0.2, 0.5, 0.3};
  SynthesisRequest r;
  r.seed = 4242;
  std::vector<double> counts(3, 0.0);
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(r.seed, i));
    ++counts[detail::pick_pattern(r, i, prior, rng)];
  }
  double chi2 = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double e = prior[k] * static_cast<double>(n);
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  EXPECT_LT(chi2, 9.210);  // chi-square, 2 degrees of freedom, 0.01

  // and synthesis uses exactly that draw
  const auto& m = shared::two_behavior_model();
  SynthesisRequest small;
  small.seed = 4242;
  small.count = 8;
  const auto years = synthesize_year_detailed(m, small);
  for (std::size_t i = 0; i < years.size(); ++i) {
    Rng rng(derive_seed(small.seed, i));
    EXPECT_EQ(years[i].yearly_pattern, detail::pick_pattern(small, i, m.prior, rng));
  }
}

TEST(Synthesize, RequestErrors) {
  const auto& m = shared::two_behavior_model();
  SynthesisRequest r;
  r.yearly_pattern = 99;
  EXPECT_THROW(synthesize_year(m, r), ArgumentError);
  r.yearly_pattern.reset();
  r.count = 0;
  EXPECT_THROW(synthesize_year(m, r), ArgumentError);
  r.count = 2;
  r.yearly_patterns = {0};
  EXPECT_THROW(synthesize_year(m, r), ArgumentError);
  r.yearly_patterns = {1, 0};
  const auto out = synthesize_year_detailed(m, r);
  EXPECT_EQ(out[0].yearly_pattern, 1u);
  EXPECT_EQ(out[1].yearly_pattern, 0u);
}

TEST(Baseline, SingleYearWithoutRepeatsReplays) {
  Corpus corpus;
  corpus.interval_minutes = 15;
  Segment year{Scale::Year, "u", 0, {}};
  for (std::size_t i = 0; i < 34944; ++i) year.values.push_back(static_cast<double>(i));
  corpus.years.push_back(year);
  const std::vector<std::size_t> labels{0};
  const auto b = train_baseline(corpus, labels, 1, 34944);
  SynthesisRequest r;
  EXPECT_EQ(synthesize_baseline_year(b, r).at(0).values, year.values);
}

TEST(Baseline, OutputIsAWalkOfTheChain) {
  const auto& m = shared::two_behavior_model();
  const auto b = train_baseline(m, shared::two_behavior().profiles, 32);
  ASSERT_EQ(b.patterns.size(), m.year_catalog.size());
  EXPECT_NEAR(b.prior[0] + b.prior[1], 1.0, 1e-12);
  SynthesisRequest r;
  r.count = 2;
  r.yearly_pattern = 0;
  const auto out = synthesize_baseline_year(b, r);
  const auto& bp = b.patterns[0];
  for (const auto& p : out) {
    ASSERT_EQ(p.values.size(), 34944u);
    for (std::size_t i = 1; i < p.values.size(); ++i) {
      const State s = bp.quantizer.quantize(p.values[i - 1]);
      const State t = bp.quantizer.quantize(p.values[i]);
      ASSERT_GT(bp.chain.rows.at(s).probability(t), 0.0);
    }
  }
}
