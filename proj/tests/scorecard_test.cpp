/*
 * Copyright 2026 The PermuteAttack Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <cmath>

#include "permuteattack/error.hpp"
#include "permuteattack/rng.hpp"
#include "permuteattack/scorecard.hpp"

namespace permuteattack {
namespace {

ScorecardConfig table_config() {
  ScorecardConfig cfg;
  cfg.base_odds = 1.0;
  return cfg;
}

TEST(ScorecardTest, BaselineOddsGiveBaseScore) {
  const ScorecardConfig cfg;
  EXPECT_EQ(cfg.base_score, 600.0);
  EXPECT_EQ(cfg.pdo, 15.0);
  EXPECT_EQ(cfg.base_odds, 20.0);
  EXPECT_NEAR(raw_score(1.0 / 21.0, cfg), 600.0, 1e-9);
  ScorecardConfig nearest = cfg;
  nearest.rounding = Rounding::kNearest;
  EXPECT_EQ(pd_to_score(1.0 / 21.0, nearest), 600);
}

TEST(ScorecardTest, ReferenceSingleScores) {
  EXPECT_EQ(pd_to_score(0.13, table_config()), 641);
  EXPECT_EQ(pd_to_score(0.63, table_config()), 588);
}

TEST(ScorecardTest, FirstTableScores) {
  const double pds[] = {0.13, 0.59, 0.60, 0.60};
  const long expected[] = {641, 592, 591, 591};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(pd_to_score(pds[i], table_config()), expected[i]);
}

TEST(ScorecardTest, OutOfRangeProbabilityIsADomainError) {
  for (double pd : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    EXPECT_THROW(pd_to_score(pd, ScorecardConfig{}), DomainError) << pd;
  }
}

TEST(ScorecardTest, ConfigValidation) {
  ScorecardConfig bad;
  bad.pdo = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ScorecardConfig{};
  bad.base_odds = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(ScorecardConfig::from_json({{"rounding", "up"}}), ConfigError);
  const auto cfg = ScorecardConfig::from_json({{"base_odds", 1}, {"rounding", "nearest"}});
  EXPECT_EQ(cfg.rounding, Rounding::kNearest);
  EXPECT_EQ(ScorecardConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
}

// Doubling the odds adds exactly pdo points before rounding.
TEST(ScorecardProperty, DoublingOddsAddsPdo) {
  Rng rng(17);
  const ScorecardConfig cfg;
  for (int k = 0; k < 100; ++k) {
    const double pd = 0.01 + 0.9 * rng.uniform();
    const double odds = (1 - pd) / pd;
    const double pd2 = 1 / (1 + 2 * odds);
    EXPECT_NEAR(raw_score(pd2, cfg) - raw_score(pd, cfg), cfg.pdo, 1e-9);
  }
}

TEST(ScorecardProperty, InverseRecoversProbability) {
  Rng rng(18);
  for (const auto& cfg : {ScorecardConfig{}, table_config()}) {
    for (int k = 0; k < 1000; ++k) {
      const double pd = 1e-4 + (1 - 2e-4) * rng.uniform();
      EXPECT_NEAR(score_to_pd(raw_score(pd, cfg), cfg), pd, 1e-12);
    }
  }
}

TEST(ScorecardProperty, StrictlyDecreasingInPd) {
  const ScorecardConfig cfg;
  double prev = raw_score(1e-4, cfg);
  for (int k = 1; k < 10000; ++k) {
    const double s = raw_score(1e-4 + k * (1 - 2e-4) / 10000, cfg);
    ASSERT_LT(s, prev);
    prev = s;
  }
}

TEST(ScoreReportTest, OriginalFirstThenCounterfactuals) {
  const std::vector<CounterfactualEntry> cfs{
      {{0.54, 0.46}, {"duration_in_month: 24 -> 12"}},
      {{0.58, 0.42}, {"housing: own -> rent", "age: 30 -> 41"}},
      {{0.53, 0.47}, {}},
  };
  const ScoreReport report = score_report({0.37, 0.63}, cfs, table_config());
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[0].label, "Original");
  EXPECT_EQ(report.rows[3].label, "CF3");
  EXPECT_EQ(report.rows[0].pd, 0.63);
  const std::string text = report.to_text();
  EXPECT_NE(text.find("housing: own -> rent; age: 30 -> 41"), std::string::npos);
  EXPECT_EQ(report.to_json().size(), 4u);
  const std::vector<CounterfactualEntry> none;
  EXPECT_THROW(score_report({0.4, 0.6}, none, table_config()), DataError);
}

TEST(ScoreReportTest, EmptyChangeSetRendersAsDash) {
  const std::vector<CounterfactualEntry> cfs{{{0.5, 0.5}, {"x: 1 -> 2"}}};
  const std::string text = score_report({0.4, 0.6}, cfs, table_config()).to_text();
  // Line 0 is the header, line 1 the original.
  const auto start = text.find('\n') + 1;
  const std::string original = text.substr(start, text.find('\n', start) - start);
  EXPECT_EQ(original.substr(original.size() - std::string("—").size()), "—");
}

TEST(ScoreReportTest, CertainPredictionsHaveNoScore) {
  const std::vector<CounterfactualEntry> cfs{{{1.0, 0.0}, {"x: 1 -> 2"}}};
  const ScoreReport report = score_report({0.37, 0.63}, cfs, table_config());
  EXPECT_EQ(report.rows[0].score, 588);
  EXPECT_FALSE(report.rows[1].score.has_value());
  EXPECT_TRUE(report.to_json()[1]["score"].is_null());
  EXPECT_EQ(report.to_json()[0]["score"], 588);
  const std::string text = report.to_text();
  const auto cf = text.substr(text.find("CF1"));
  EXPECT_NE(cf.find("—  x: 1 -> 2"), std::string::npos) << text;
}

// Second reference table: original pd 0.63 and three counterfactuals.
TEST(ScoreReportTest, SecondTableScores) {
  const std::vector<CounterfactualEntry> cfs{
      {{0.54, 0.46}, {}}, {{0.58, 0.42}, {}}, {{0.53, 0.47}, {}}};
  const ScoreReport report = score_report({0.37, 0.63}, cfs, table_config());
  const long expected[] = {588, 603, 607, 602};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(report.rows[i].score, expected[i]) << "pd " << report.rows[i].pd;
  }
}

}  // namespace
}  // namespace permuteattack
