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

// Batch experiments and model-criticism analytics over attack results.

#ifndef PERMUTEATTACK_ANALYSIS_HPP_
#define PERMUTEATTACK_ANALYSIS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "permuteattack/attack.hpp"
#include "permuteattack/forest.hpp"
#include "permuteattack/model.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack {

struct FeatureDirection {
  // Numeric features.
  std::size_t increases = 0;
  std::size_t decreases = 0;
  double total_increase = 0.0;
  double total_decrease = 0.0;
  // Categorical features: "old -> new" level strings.
  std::map<std::string, std::size_t> transitions;
};

struct BatchSummary {
  std::size_t n_attacked = 0;
  std::size_t n_success = 0;
  std::size_t n_errors = 0;
  double success_rate = 0.0;
  double mean_changed_features = 0.0;
  // l0 of each successful counterfactual -> number of results.
  std::map<std::size_t, std::size_t> histogram;
  std::map<std::string, std::size_t> per_feature_change_count;
  std::map<std::string, FeatureDirection> per_feature_direction;
  // Same aggregate split by "original -> target" class index.
  std::map<std::string, std::map<std::string, FeatureDirection>> direction_by_flip;

  nlohmann::json to_json() const;
  // "bin,count" rows.
  std::string histogram_csv() const;
};

BatchSummary summarize(std::span<const AttackResult> results, const Schema& schema);

// Features ordered by change count (descending, then by name).
std::vector<std::string> most_changed_features(const BatchSummary& summary,
                                               std::size_t k);

struct BatchOutput {
  std::vector<AttackResult> results;
  BatchSummary summary;
};

// One attack per instance. Instance i uses seed config.seed + i and targets
// config.target_class when set, otherwise the opposite class (binary
// models). Per-instance failures are recorded, not thrown. `workers` > 1
// only takes effect for models that are safe to call concurrently.
BatchOutput run_batch(std::span<const Instance> instances, Classifier& model,
                      const AttackEnvironment& env, const AttackConfig& config,
                      std::size_t workers = 1);

// run_batch with mutability limited to `allowed_features`.
BatchOutput restricted_attack(std::span<const Instance> instances,
                              const std::vector<std::string>& allowed_features,
                              Classifier& model, const AttackEnvironment& env,
                              const AttackConfig& config, std::size_t workers = 1);

// Every schema feature not named in `excluded`.
std::vector<std::string> complement_features(const Schema& schema,
                                             const std::vector<std::string>& excluded);

struct CoOccurrenceGraph {
  // Feature -> number of successful results that changed it.
  std::map<std::string, std::size_t> nodes;
  // Lexicographically ordered pair -> number of results changing both.
  std::map<std::pair<std::string, std::string>, std::size_t> edges;

  std::size_t weight(const std::string& a, const std::string& b) const;
  // "a<TAB>b<TAB>weight" per edge.
  std::string to_edge_list() const;
  // Graphviz DOT, edge penwidth proportional to weight.
  std::string to_dot() const;
};

CoOccurrenceGraph cooccurrence(std::span<const AttackResult> results,
                               const Schema& schema);

struct RealismResult {
  double fail_rate = 0.0;
  std::size_t n_real = 0;
  std::size_t n_train_generated = 0;
  std::size_t n_test_generated = 0;
};

// Discriminator forest settings. The tree count is odd so that a soft vote
// over pure leaves cannot tie; ties would otherwise all count as detected.
ForestParams discriminator_params(std::uint64_t seed = 0);

// Trains a forest on {real -> 1, generated_train -> 0} and returns the
// fraction of generated_test it labels real.
RealismResult discriminator_fail_rate(std::span<const Instance> real,
                                      std::span<const Instance> generated_train,
                                      std::span<const Instance> generated_test,
                                      const Schema& schema,
                                      const ForestParams& params);

// Counterfactual set A from seed_a trains the discriminator, set B from
// seed_b tests it.
RealismResult realism_discriminator(std::span<const Instance> real_test,
                                    const AttackConfig& generator_config,
                                    Classifier& model, const AttackEnvironment& env,
                                    const ForestParams& discriminator_params,
                                    std::uint64_t seed_a, std::uint64_t seed_b,
                                    std::size_t workers = 1);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_ANALYSIS_HPP_
