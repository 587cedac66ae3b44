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

#include <stdexcept>

#include "permuteattack/analysis.hpp"
#include "permuteattack/error.hpp"
#include "test_util.hpp"

namespace permuteattack {
namespace {

using testing::parse_text;

// a, b numeric (ordinal), c categorical {x, y}.
Schema abc_schema() {
  return parse_text("a,b,c,label\n1,5,x,0\n2,6,y,1\n3,7,x,0\n").schema;
}

AttackResult success_with(std::vector<ChangedFeature> changes, int from = 0, int to = 1) {
  AttackResult r;
  r.success = true;
  r.original_class = from;
  r.target_class = to;
  r.changed_features = std::move(changes);
  Instance cf{{1.0, 5.0, 0.0}};
  for (const auto& c : r.changed_features) cf.values[c.index] = c.new_value;
  r.counterfactual = cf;
  return r;
}

std::vector<AttackResult> sample_results() {
  std::vector<AttackResult> results;
  results.push_back(success_with({{0, 1.0, 3.0}, {1, 5.0, 6.0}}));
  results.push_back(success_with({{0, 2.0, 1.0}, {1, 7.0, 5.0}, {2, 0.0, 1.0}}, 1, 0));
  results.push_back(success_with({{2, 0.0, 1.0}}));
  AttackResult failed;
  failed.trace.resize(3);
  results.push_back(failed);
  return results;
}

TEST(SummaryTest, CountsHistogramAndDirections) {
  const auto results = sample_results();
  const BatchSummary s = summarize(results, abc_schema());
  EXPECT_EQ(s.n_attacked, 4u);
  EXPECT_EQ(s.n_success, 3u);
  EXPECT_DOUBLE_EQ(s.success_rate, 0.75);
  EXPECT_DOUBLE_EQ(s.mean_changed_features, 2.0);
  EXPECT_EQ(s.histogram, (std::map<std::size_t, std::size_t>{{1, 1}, {2, 1}, {3, 1}}));
  EXPECT_EQ(s.per_feature_change_count.at("a"), 2u);
  EXPECT_EQ(s.per_feature_change_count.at("c"), 2u);
  const auto& a = s.per_feature_direction.at("a");
  EXPECT_EQ(a.increases, 1u);
  EXPECT_EQ(a.decreases, 1u);
  EXPECT_DOUBLE_EQ(a.total_increase, 2.0);
  EXPECT_DOUBLE_EQ(a.total_decrease, 1.0);
  EXPECT_EQ(s.per_feature_direction.at("c").transitions.at("x -> y"), 2u);
  EXPECT_EQ(s.direction_by_flip.at("1->0").at("b").decreases, 1u);
  EXPECT_EQ(s.direction_by_flip.at("0->1").at("b").increases, 1u);
  EXPECT_EQ(s.histogram_csv(), "bin,count\n1,1\n2,1\n3,1\n");
  EXPECT_EQ(s.to_json()["histogram"]["3"], 1);
}

TEST(SummaryTest, MostChangedBreaksTiesByName) {
  const auto results = sample_results();
  const BatchSummary s = summarize(results, abc_schema());
  EXPECT_EQ(most_changed_features(s, 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(most_changed_features(s, 10).size(), 3u);
}

TEST(CoOccurrenceTest, PairCountsOverSuccessfulResults) {
  const auto results = sample_results();
  const CoOccurrenceGraph g = cooccurrence(results, abc_schema());
  EXPECT_EQ(g.weight("a", "b"), 2u);
  EXPECT_EQ(g.weight("b", "a"), 2u);
  EXPECT_EQ(g.weight("a", "c"), 1u);
  EXPECT_EQ(g.weight("b", "c"), 1u);
  EXPECT_EQ(g.nodes.at("c"), 2u);
  EXPECT_EQ(g.to_edge_list(), "a\tb\t2\na\tc\t1\nb\tc\t1\n");
  const std::string dot = g.to_dot();
  EXPECT_EQ(dot.rfind("graph cooccurrence {", 0), 0u);
  EXPECT_NE(dot.find("\"a\" -- \"b\" [weight=2, penwidth=8]"), std::string::npos);
  EXPECT_NE(dot.find("\"a\" -- \"c\" [weight=1, penwidth=4.5]"), std::string::npos);
}

TEST(CoOccurrenceTest, SingleChangesHaveNoEdges) {
  const std::vector<AttackResult> results{success_with({{2, 0.0, 1.0}})};
  const auto g = cooccurrence(results, abc_schema());
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.nodes.size(), 1u);
}

Dataset threshold_train() {
  std::string csv = "x1,x2,x3,label\n";
  for (int i = 0; i < 40; ++i) {
    csv += format_number(i / 40.0) + "," + format_number((i * 7 % 40) / 40.0) + "," +
           std::to_string(i % 3) + "," + std::to_string(i % 2) + "\n";
  }
  return parse_text(csv);
}

TEST(BatchTest, ParallelAndSerialRunsAgree) {
  const Dataset train = threshold_train();
  const AttackEnvironment env(train, 5);
  auto model = testing::threshold_model(0, 0.5);
  std::vector<Instance> batch(train.rows.begin(), train.rows.begin() + 20);
  AttackConfig cfg;
  cfg.seed = 77;
  const auto serial = run_batch(batch, model, env, cfg, 1);
  const auto parallel = run_batch(batch, model, env, cfg, 4);
  ASSERT_EQ(serial.results.size(), 20u);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(serial.results[i].seed, 77 + i);
    EXPECT_EQ(attack_result_to_json(serial.results[i], env.schema(), cfg),
              attack_result_to_json(parallel.results[i], env.schema(), cfg));
  }
  EXPECT_EQ(serial.summary.n_success, 20u);
}

TEST(BatchTest, BackendFailuresAreRecordedPerInstance) {
  const Dataset train = threshold_train();
  const AttackEnvironment env(train, 5);
  int calls = 0;
  testing::FunctionClassifier flaky([&](const Instance& x) -> ProbabilityVector {
    if (++calls > 3) throw BackendError("model went away");
    return x[0] > 0.5 ? ProbabilityVector{0.1, 0.9} : ProbabilityVector{0.9, 0.1};
  });
  std::vector<Instance> batch(train.rows.begin(), train.rows.begin() + 3);
  const auto out = run_batch(batch, flaky, env, AttackConfig{}, 1);
  EXPECT_EQ(out.summary.n_errors, 3u);
  for (const auto& r : out.results) EXPECT_EQ(r.error, "model went away");
}

TEST(BatchTest, RejectsEmptyBatchAndMulticlassWithoutTarget) {
  const Dataset train = threshold_train();
  const AttackEnvironment env(train, 5);
  auto model = testing::threshold_model(0, 0.5);
  const std::vector<Instance> none;
  EXPECT_THROW(run_batch(none, model, env, AttackConfig{}), DataError);
  testing::FunctionClassifier three([](const Instance&) {
    return ProbabilityVector{0.2, 0.3, 0.5};
  }, 3);
  EXPECT_THROW(run_batch(train.rows, three, env, AttackConfig{}), ConfigError);
}

TEST(RestrictedAttackTest, DisallowedFeaturesNeverChange) {
  const Dataset train = threshold_train();
  const AttackEnvironment env(train, 5);
  // Class 1 needs x1 > 0.5 or x2 > 0.5; only x2 and x3 may move.
  testing::FunctionClassifier model([](const Instance& x) -> ProbabilityVector {
    return x[0] > 0.5 || x[1] > 0.5 ? ProbabilityVector{0.1, 0.9}
                                    : ProbabilityVector{0.9, 0.1};
  });
  std::vector<Instance> batch;
  for (const auto& row : train.rows) {
    if (row[0] <= 0.5 && row[1] <= 0.5) batch.push_back(row);
  }
  ASSERT_FALSE(batch.empty());
  const auto out = restricted_attack(batch, {"x2", "x3"}, model, env, AttackConfig{});
  EXPECT_EQ(out.summary.n_success, batch.size());
  for (const auto& r : out.results) {
    for (const auto& c : r.changed_features) EXPECT_NE(c.index, 0u);
  }
  EXPECT_THROW(restricted_attack(batch, {}, model, env, AttackConfig{}), ConfigError);
  EXPECT_THROW(restricted_attack(batch, {"x9"}, model, env, AttackConfig{}), ConfigError);
}

TEST(RestrictedAttackTest, ComplementOfExcludedFeatures) {
  const Schema schema = abc_schema();
  EXPECT_EQ(complement_features(schema, {"b"}), (std::vector<std::string>{"a", "c"}));
  EXPECT_THROW(complement_features(schema, {"zz"}), DataError);
}

// Generated rows that are really just other real rows: the discriminator
// cannot tell them apart and is fooled about half the time.
TEST(RealismTest, IdentityGeneratorIsIndistinguishable) {
  const Dataset ds = load_csv(testing::german_credit_path(), "default");
  const auto split = split_dataset(ds, 0.6, 42);
  const std::span<const Instance> rows(split.train.rows);
  const auto r = discriminator_fail_rate(rows.subspan(0, 200), rows.subspan(200, 200),
                                         rows.subspan(400, 200), split.train.schema,
                                         discriminator_params(1));
  EXPECT_GE(r.fail_rate, 0.4);
  EXPECT_LE(r.fail_rate, 0.6);
  EXPECT_EQ(r.n_test_generated, 200u);
}

TEST(RealismTest, DiscriminatorVoteCannotTie) {
  EXPECT_EQ(discriminator_params(5).n_trees % 2, 1);
  EXPECT_EQ(discriminator_params(5).seed, 5u);
}

TEST(RealismTest, ObviousFakesAreCaught) {
  const Dataset train = threshold_train();
  std::vector<Instance> fake_a, fake_b;
  for (const auto& row : train.rows) {
    Instance f = row;
    f.values[0] = 5.0 + row[0];
    fake_a.push_back(f);
    f.values[0] = 5.5 + row[0];
    fake_b.push_back(f);
  }
  const ForestParams params = discriminator_params(2);
  const auto r = discriminator_fail_rate(train.rows, fake_a, fake_b, train.schema, params);
  EXPECT_LT(r.fail_rate, 0.05);
  const std::vector<Instance> none;
  EXPECT_THROW(discriminator_fail_rate(train.rows, none, fake_b, train.schema, params),
               DataError);
}

}  // namespace
}  // namespace permuteattack
