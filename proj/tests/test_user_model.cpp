#include <gtest/gtest.h>

#include <sstream>

#include <loadsynth/fixtures.hpp>
#include <loadsynth/user_model.hpp>

#include "oracles.hpp"

using namespace loadsynth;

namespace {

UserSchema one_numeric() {
  return parse_schema(nlohmann::json{{"schema_id", "s"},
                                     {"attributes", {{{"name", "x"}, {"type", "numeric"}}}},
                                     {"allowlist", {"x"}}});
}

UserRecord rec(double x) { return {"s", {x}}; }

BinaryLogitProblem random_problem(Rng& rng, std::size_t n, std::size_t w) {
  BinaryLogitProblem p;
  p.lambda = 1e-3;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < w; ++j) row.push_back(2 * rng.uniform() - 1);
    p.x.push_back(row);
    p.y.push_back(rng.uniform() < 0.4 ? 1.0 : 0.0);
  }
  return p;
}

}  // namespace

TEST(Schema, AllowlistFiltersAttributes) {
  const auto s = parse_schema(fixtures::household_schema_json());
  EXPECT_EQ(s.attributes.size(), 3u);
  EXPECT_EQ(s.filtered, std::vector<std::string>{"owner_name"});
  EXPECT_FALSE(s.index_of("owner_name"));
  const auto narrower = parse_schema(fixtures::household_schema_json(), std::vector<std::string>{"house_year"});
  EXPECT_EQ(narrower.attributes.size(), 1u);
  EXPECT_THROW(parse_schema(fixtures::household_schema_json(), std::vector<std::string>{"nope"}), ValidationError);
  auto j = fixtures::household_schema_json();
  j.erase("allowlist");
  EXPECT_THROW(parse_schema(j), ValidationError);
}

TEST(Schema, UsersCsvIgnoresFilteredColumns) {
  const auto s = parse_schema(fixtures::household_schema_json());
  std::istringstream in("user_id,house_year,owner_name,floor_area,building_type\nu1,1999,Alice,120.5,house\n");
  const auto rows = parse_users_csv(in, s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].user_id, "u1");
  EXPECT_EQ(std::get<double>(rows[0].record.values[0]), 1999.0);
  EXPECT_EQ(std::get<std::string>(rows[0].record.values[2]), "house");
  std::istringstream bad_level("user_id,house_year,floor_area,building_type\nu1,1999,120,castle\n");
  EXPECT_THROW(parse_users_csv(bad_level, s), ParseError);
  std::istringstream extra("user_id,house_year,floor_area,building_type,income\nu1,1999,120,house,5\n");
  EXPECT_THROW(parse_users_csv(extra, s), ParseError);
  std::istringstream non_int("user_id,house_year,floor_area,building_type\nu1,1999.5,120,house\n");
  EXPECT_THROW(parse_users_csv(non_int, s), ParseError);
}

TEST(SampleUser, SingleRecordNoNoise) {
  const auto s = one_numeric();
  const std::vector<UserRecord> pool{rec(3.25)};
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_user(pool, s, rng), pool[0]);
}

TEST(SampleUser, HouseYearFrequencies) {
  const auto s = parse_schema(nlohmann::json{{"schema_id", "h"},
                                             {"attributes", {{{"name", "house_year"}, {"type", "integer"}}}},
                                             {"allowlist", {"house_year"}}});
  const std::vector<UserRecord> pool{{"h", {1990.0}}, {"h", {2000.0}}};
  Rng rng(2);
  UserSampleOptions off;
  off.integer_jitter = 0;
  int n1990 = 0;
  for (int i = 0; i < 10000; ++i) n1990 += std::get<double>(sample_user(pool, s, rng, off).values[0]) == 1990.0;
  EXPECT_NEAR(n1990 / 10000.0, 0.5, 0.02);
  // default jitter moves integers by at most one step
  for (int i = 0; i < 1000; ++i) {
    const double v = std::get<double>(sample_user(pool, s, rng).values[0]);
    EXPECT_TRUE(std::abs(v - 1990.0) <= 1.0 || std::abs(v - 2000.0) <= 1.0);
  }
}

TEST(SampleUser, CategoricalStaysInLevelsAndRowsStayIntact) {
  const auto s = parse_schema(fixtures::household_schema_json());
  const auto rows = fixtures::household_users(fixtures::two_behavior_corpus(), s);
  std::vector<UserRecord> pool;
  for (const auto& r : rows) pool.push_back(r.record);
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto u = sample_user(pool, s, rng);
    EXPECT_NO_THROW(validate(u, s));
    // floor area is not integer-typed, so it is copied from a real row along with the building type
    bool found = false;
    for (const auto& p : pool) found = found || (p.values[1] == u.values[1] && p.values[2] == u.values[2]);
    EXPECT_TRUE(found);
  }
  EXPECT_THROW(sample_user(std::vector<UserRecord>{}, s, rng), ArgumentError);
}

TEST(Encoder, DecodeEncodeRoundTrip) {
  const auto s = parse_schema(fixtures::household_schema_json());
  const auto rows = fixtures::household_users(fixtures::two_behavior_corpus(), s);
  std::vector<UserRecord> pool;
  for (const auto& r : rows) pool.push_back(r.record);
  const auto enc = FeatureEncoder::fit(s, pool);
  EXPECT_EQ(enc.width(), 5u);
  for (const auto& r : pool) {
    const auto x = enc.encode(r);
    EXPECT_EQ(enc.encode(enc.decode(x)), x);
    const auto back = enc.decode(x);
    EXPECT_EQ(std::get<std::string>(back.values[2]), std::get<std::string>(r.values[2]));
    EXPECT_NEAR(std::get<double>(back.values[1]), std::get<double>(r.values[1]), 1e-9);
  }
  EXPECT_THROW(enc.encode(UserRecord{"other", {}}), ValidationError);
}

TEST(Logit, GradientMatchesCentralDifferences) {
  Rng rng(4);
  const auto p = random_problem(rng, 40, 3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> beta;
    for (int j = 0; j < 4; ++j) beta.push_back(4 * rng.uniform() - 2);
    const auto g = p.gradient(beta);
    std::vector<double> fd(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) {
      const double h = 1e-5;
      auto up = beta, dn = beta;
      up[j] += h;
      dn[j] -= h;
      fd[j] = (p.objective(up) - p.objective(dn)) / (2 * h);
    }
    double num = 0, den = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      num += (g[j] - fd[j]) * (g[j] - fd[j]);
      den += fd[j] * fd[j];
    }
    EXPECT_LT(std::sqrt(num) / std::max(std::sqrt(den), 1e-12), 1e-5);
  }
}

TEST(Logit, InterceptOnlyMatchesLogOdds) {
  BinaryLogitProblem p;
  for (int i = 0; i < 40; ++i) {
    p.x.push_back({0.0});
    p.y.push_back(i < 10 ? 1.0 : 0.0);
  }
  const auto fit = fit_binary_logit(p);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.beta[0], std::log(0.25 / 0.75), 1e-6);
  EXPECT_NEAR(fit.beta[1], 0.0, 1e-12);
}

TEST(Logit, ObjectiveNonIncreasingAndStopsOnGradientNorm) {
  Rng rng(5);
  const auto p = random_problem(rng, 60, 4);
  LogitOptions o;
  o.record_trace = true;
  const auto fit = fit_binary_logit(p, o);
  ASSERT_TRUE(fit.converged);
  for (std::size_t i = 1; i < fit.trace.size(); ++i) EXPECT_LE(fit.trace[i], fit.trace[i - 1] + 1e-15);
  EXPECT_LT(max_abs(p.gradient(fit.beta)), 1e-6);
  EXPECT_EQ(fit.trace.size(), fit.iterations + 1);
}

TEST(Logit, MatchesNewtonOracle) {
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    const auto p = random_problem(rng, 50, 3);
    const auto fit = fit_binary_logit(p);
    oracle::LogitOracle o{p.x, p.y, p.lambda};
    const auto ref = o.solve();
    EXPECT_NEAR(fit.objective, o.loss(ref), 1e-6);
    for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(fit.beta[j], ref[j], 1e-3);
  }
}

TEST(Logit, SeparatedOneDimensionalData) {
  const auto s = one_numeric();
  std::vector<UserRecord> users;
  std::vector<std::size_t> labels;
  for (int i = -10; i <= 10; ++i) {
    if (i == 0) continue;
    users.push_back(rec(i * 1.0));
    labels.push_back(i > 0 ? 1 : 0);
  }
  const auto m = fit_logit(s, users, labels);
  for (std::size_t i = 0; i < users.size(); ++i) EXPECT_EQ(assign_pattern(users[i], m, AssignMode::Argmax, 0), labels[i]);

  BinaryLogitProblem p;
  p.lambda = 1e-3;
  for (const auto& u : users) p.x.push_back(m.encoder.encode(u));
  for (auto l : labels) p.y.push_back(l == 1 ? 1.0 : 0.0);
  oracle::LogitOracle o{p.x, p.y, p.lambda};
  EXPECT_NEAR(p.objective(m.coefficients[1]), o.loss(o.solve()), 1e-6);
}

TEST(Logit, SeparableWithoutPenaltyWarns) {
  const auto s = one_numeric();
  std::vector<UserRecord> users{rec(-2), rec(-1), rec(1), rec(2)};
  std::vector<std::size_t> labels{0, 0, 1, 1};
  LogitOptions o;
  o.lambda = 0.0;
  o.max_iters = 200;
  const auto m = fit_logit(s, users, labels, o);
  ASSERT_FALSE(m.warnings.empty());
  EXPECT_NE(m.warnings[0].find("separable"), std::string::npos);
}

TEST(Logit, SingleLabelIsError) {
  const auto s = one_numeric();
  std::vector<UserRecord> users{rec(1), rec(2)};
  EXPECT_THROW(fit_logit(s, users, std::vector<std::size_t>{3, 3}), ArgumentError);
  EXPECT_THROW(fit_logit(s, users, std::vector<std::size_t>{3}), ArgumentError);
}

TEST(Assign, ArgmaxAndTies) {
  LogitModel m;
  m.encoder.schema = one_numeric();
  m.encoder.center = {0.0};
  m.encoder.scale = {1.0};
  m.labels = {0, 1};
  m.coefficients = {{2.0, 0.0}, {-1.0, 0.0}};
  EXPECT_EQ(assign_pattern(rec(0.5), m, AssignMode::Argmax, 1), 0u);
  m.coefficients = {{1.0, 0.0}, {1.0, 0.0}};
  EXPECT_EQ(assign_pattern(rec(0.5), m, AssignMode::Argmax, 1), 0u);
  int zeros = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) zeros += assign_pattern(rec(0.5), m, AssignMode::Sample, seed) == 0;
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.02);
  EXPECT_THROW(assign_pattern(UserRecord{"s", {}}, m, AssignMode::Argmax, 1), ValidationError);
}

TEST(Assign, ShiftInvariance) {
  const auto s = parse_schema(fixtures::household_schema_json());
  const auto corpus = fixtures::two_behavior_corpus();
  const auto rows = fixtures::household_users(corpus, s);
  std::vector<UserRecord> users;
  for (const auto& r : rows) users.push_back(r.record);
  auto m = fit_logit(s, users, corpus.behavior);
  auto shifted = m;
  for (auto& c : shifted.coefficients) c[0] += 3.5;
  for (const auto& u : users) {
    EXPECT_EQ(assign_pattern(u, m, AssignMode::Argmax, 0), assign_pattern(u, shifted, AssignMode::Argmax, 0));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EXPECT_EQ(assign_pattern(u, m, AssignMode::Sample, seed), assign_pattern(u, shifted, AssignMode::Sample, seed));
    }
  }
  // attributes predict behaviour on this fixture
  for (std::size_t i = 0; i < users.size(); ++i) EXPECT_EQ(assign_pattern(users[i], m, AssignMode::Argmax, 0), corpus.behavior[i]);
}
