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

// Perturbation values for the attack. Every value written into an instance
// is taken from the training column, either marginally (a permutation draw)
// or conditioned on the discretized values of the other features.

#ifndef PERMUTEATTACK_SAMPLER_HPP_
#define PERMUTEATTACK_SAMPLER_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "permuteattack/rng.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack {

// Per-feature training columns (with multiplicity) plus the mask of
// features the attack is allowed to change. Drawing uniformly from the
// column is the same as reading the first row of a random permutation.
class PermutationDomain {
 public:
  PermutationDomain() = default;
  // Mask defaults to the schema's `is_mutable` flags.
  explicit PermutationDomain(const Dataset& train);
  PermutationDomain(const Dataset& train, std::vector<bool> mutable_mask);

  PermutationDomain with_mask(std::vector<bool> mutable_mask) const;

  std::size_t size() const { return columns_ ? columns_->size() : 0; }
  std::span<const double> values(std::size_t feature) const {
    return (*columns_)[feature];
  }
  bool is_mutable(std::size_t feature) const { return mask_[feature]; }
  const std::vector<bool>& mask() const { return mask_; }
  std::vector<std::size_t> mutable_features() const;

 private:
  std::shared_ptr<const std::vector<std::vector<double>>> columns_;
  std::vector<bool> mask_;
};

// Lookup from (feature i, discretized values of every other feature) to the
// training rows sharing that context.
class ConditionalIndex {
 public:
  // `train.schema` must already carry bin edges (see discretize()).
  explicit ConditionalIndex(const Dataset& train);

  // Training rows whose context for feature i matches `instance`. When no
  // row matches exactly, conditions are dropped one at a time until some
  // row matches: the reference is the training row closest to the query
  // (fewest mismatched conditions, then smallest total bin distance), and
  // the condition where it is farthest from the query goes first. Never
  // empty; dropping every condition yields all rows.
  std::vector<std::size_t> conditional_rows(const Instance& instance,
                                            std::size_t feature) const;

  const Schema& schema() const { return schema_; }
  std::size_t n_rows() const { return bins_.size(); }
  double value(std::size_t row, std::size_t feature) const {
    return values_[row][feature];
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const noexcept;
  };
  using ContextMap =
      std::unordered_map<std::vector<int>, std::vector<std::size_t>, KeyHash>;

  // Relaxation is a pure function of the query, so results are memoized.
  // The cache is shared between copies and guarded by its own mutex.
  struct RelaxCache {
    std::mutex mutex;
    ContextMap rows;
  };

  std::vector<std::size_t> relaxed_rows(const std::vector<int>& query,
                                        std::size_t feature) const;

  Schema schema_;
  std::vector<std::vector<int>> bins_;
  std::vector<int> column_bins_;  // column-major copy of bins_
  std::vector<std::vector<double>> values_;
  std::vector<ContextMap> contexts_;
  std::shared_ptr<RelaxCache> relax_cache_;
};

// Copy of `instance` with feature i replaced by a uniform draw from the
// training column. Throws ConfigError for an immutable feature.
Instance permute_feature(const Instance& instance, std::size_t feature,
                         const PermutationDomain& domain, Rng& rng);

// Feature-i values of the rows returned by ConditionalIndex::conditional_rows.
std::vector<double> conditional_values(const ConditionalIndex& index,
                                       const Instance& instance,
                                       std::size_t feature);

// Joint perturbation of `features`: marginal initialization followed by
// `n_iter` Gibbs sweeps in a fresh random order each sweep. Features outside
// the set are left untouched.
Instance gibbs_perturb(const ConditionalIndex& index,
                       const PermutationDomain& domain, const Instance& instance,
                       std::span<const std::size_t> features, int n_iter,
                       Rng& rng);

// Conditional value closest to `target`. Numeric features: smallest
// absolute difference (ties to the smaller value). Categorical: `target`
// itself if present, else a uniform pick among the distinct conditional
// values.
double nearest_conditional_value(const ConditionalIndex& index,
                                 const Instance& instance, std::size_t feature,
                                 double target, Rng& rng);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_SAMPLER_HPP_
