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

// PermuteAttack: genetic search for counterfactuals whose perturbations are
// permutation draws from the training columns.
//
// Each generation is scored with
//
//   fitness(x) = (f(x)_t - f(x_orig)_t) - rho0 * l0(x_orig, x) - rho1 * l2(x_orig, x)
//
// The gain is signed: a candidate that lowers the target-class probability
// is worse than the original, not as good as one that raises it by the same
// amount.
//
// The fittest member (the elite) is carried over unchanged and checked for
// success; the rest of the next generation is bred by softmax selection,
// uniform crossover and importance-weighted mutation. When the best
// target-class probability stalls, both penalties are multiplied by `decay`.

#ifndef PERMUTEATTACK_ATTACK_HPP_
#define PERMUTEATTACK_ATTACK_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "permuteattack/model.hpp"
#include "permuteattack/rng.hpp"
#include "permuteattack/sampler.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack {

struct AttackConfig {
  double rho0 = 0.6;   // l0 penalty weight
  double rho1 = 0.2;   // l2 penalty weight
  double decay = 0.96;
  int population_size = 35;
  int mating_pool_size = 15;
  int generations = 100;
  double temperature = 0.5;
  // Used by batch runs; single attacks take the target explicitly.
  std::optional<int> target_class;
  // Reported against, not enforced: the penalties are the mechanism.
  double delta0_max = std::numeric_limits<double>::infinity();
  double delta2_max = std::numeric_limits<double>::infinity();
  // Names of features the attack may change; empty means every feature the
  // schema marks mutable.
  std::vector<std::string> mutable_features;
  bool gibbs = false;
  int gibbs_iters = 5;
  int n_bins = 5;
  double mutation_probability = 0.3;
  // Carried for completeness. A permutation has no step size, so nothing
  // reads it.
  double mutation_range = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static AttackConfig from_json(const nlohmann::json& doc);
};

// Per-feature scale for the l2 term: training standard deviation for
// numeric features (1 when the column is constant), categorical features
// count 1 when changed.
class DistanceScales {
 public:
  DistanceScales() = default;
  explicit DistanceScales(const Dataset& train);

  std::size_t l0(const Instance& a, const Instance& b) const;
  double l2(const Instance& a, const Instance& b) const;
  double scale(std::size_t feature) const { return scale_[feature]; }

 private:
  std::vector<double> scale_;
  std::vector<bool> categorical_;
};

// Everything derived from the training data that attacks share: the
// discretized schema, permutation domain, conditional index and distance
// scales. Immutable once built; safe to share across threads.
class AttackEnvironment {
 public:
  AttackEnvironment(Dataset train, int n_bins);

  const Dataset& train() const { return train_; }
  const Schema& schema() const { return train_.schema; }
  const PermutationDomain& domain() const { return domain_; }
  const ConditionalIndex& index() const { return index_; }
  const DistanceScales& scales() const { return scales_; }
  int n_bins() const { return n_bins_; }

  // Schema mutability intersected with config.mutable_features.
  std::vector<bool> mutable_mask(const AttackConfig& config) const;

 private:
  int n_bins_;
  Dataset train_;
  PermutationDomain domain_;
  ConditionalIndex index_;
  DistanceScales scales_;
};

struct Candidate {
  Instance instance;
  double fitness = 0.0;
  ProbabilityVector probs;
  std::vector<bool> changed_mask;
  std::size_t l0 = 0;
  double l2 = 0.0;
};

struct GenerationTrace {
  int generation = 0;
  double best_fitness = 0.0;
  double best_target_prob = 0.0;
  // Fitness of the carried-over elite under this generation's penalties;
  // NaN for the first generation.
  double carried_elite_fitness = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_l0 = 0;
  double rho0 = 0.0;
  double rho1 = 0.0;
};

struct ChangedFeature {
  std::size_t index = 0;
  double old_value = 0.0;
  double new_value = 0.0;
  friend bool operator==(const ChangedFeature&, const ChangedFeature&) = default;
};

struct AttackResult {
  bool success = false;
  std::optional<Instance> counterfactual;
  int generations_used = 0;
  std::vector<ChangedFeature> changed_features;
  std::vector<GenerationTrace> trace;
  ProbabilityVector original_probs;
  ProbabilityVector final_probs;
  int original_class = 0;
  int target_class = 0;
  double l2 = 0.0;
  bool within_budget = true;
  std::uint64_t seed = 0;
  // Set when the attack aborted (backend failure inside a batch).
  std::string error;
};

// Pure fitness from the ingredients.
double fitness_value(double target_prob, double original_target_prob,
                     std::size_t l0, double l2, double rho0, double rho1);

// Scores one instance with a single model call.
double compute_fitness(const Instance& x, const Instance& x_orig, int target,
                       double rho0, double rho1, Classifier& model,
                       const DistanceScales& scales);

// exp((v - max) / temperature), normalized.
std::vector<double> softmax(std::span<const double> values, double temperature = 1.0);

// `pairs` parent index pairs drawn with replacement from softmax(fitness / tau).
std::vector<std::pair<std::size_t, std::size_t>> select_parents(
    std::span<const double> fitness, double temperature, std::size_t pairs,
    Rng& rng);

// Uniform crossover. With an index (Gibbs mode), every value donated by
// parent2 that differs from parent1 is replaced by the conditional value
// nearest to it given the child built so far.
Instance crossover(const Instance& parent1, const Instance& parent2,
                   const ConditionalIndex* index, Rng& rng);

// Distinct mutable features for one mutation: the count is
// Binomial(#mutable, probability) clamped to at least 1, the features are
// drawn without replacement with softmax(importance) weights.
std::vector<std::size_t> choose_mutation_features(
    std::span<const double> importance, const std::vector<bool>& mutable_mask,
    double probability, Rng& rng);

Instance mutate(const Instance& child, std::span<const double> importance,
                const AttackConfig& config, const PermutationDomain& domain,
                const ConditionalIndex& index, Rng& rng);

// Multiplies both penalties by `decay` when no progress was made.
std::pair<double, double> update_parameters(double rho0, double rho1,
                                            bool progress, double decay);

AttackResult attack(const Instance& x_orig, int target_class, Classifier& model,
                    const AttackEnvironment& env, const AttackConfig& config);

// Convenience overload that builds the environment from `train`.
AttackResult attack(const Instance& x_orig, int target_class, Classifier& model,
                    const Dataset& train, const AttackConfig& config);

nlohmann::json attack_result_to_json(const AttackResult& result,
                                     const Schema& schema,
                                     const AttackConfig& config);
// Inverse of attack_result_to_json (the config echo is not read back).
AttackResult attack_result_from_json(const nlohmann::json& doc,
                                     const Schema& schema);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_ATTACK_HPP_
