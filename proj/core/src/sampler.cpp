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

#include "permuteattack/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "permuteattack/error.hpp"

namespace permuteattack {

namespace {

constexpr std::size_t kRelaxCacheLimit = 1 << 16;

std::vector<std::vector<double>> columns_of(const Dataset& train) {
  std::vector<std::vector<double>> cols(train.n_features());
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = train.column(i);
  return cols;
}

void require_mutable(const PermutationDomain& domain, std::size_t feature) {
  if (feature >= domain.size()) {
    throw ConfigError("feature index " + std::to_string(feature) + " out of range");
  }
  if (!domain.is_mutable(feature)) {
    throw ConfigError("feature " + std::to_string(feature) + " is not mutable");
  }
}

}  // namespace

PermutationDomain::PermutationDomain(const Dataset& train)
    : PermutationDomain(train, [&] {
        std::vector<bool> mask;
        for (const auto& f : train.schema.features) mask.push_back(f.is_mutable);
        return mask;
      }()) {}

PermutationDomain::PermutationDomain(const Dataset& train,
                                     std::vector<bool> mutable_mask)
    : columns_(std::make_shared<const std::vector<std::vector<double>>>(
          columns_of(train))),
      mask_(std::move(mutable_mask)) {
  if (train.rows.empty()) throw DataError("permutation domain needs training rows");
  if (mask_.size() != train.n_features()) {
    throw ConfigError("mutable mask length does not match the schema");
  }
}

PermutationDomain PermutationDomain::with_mask(std::vector<bool> mutable_mask) const {
  if (mutable_mask.size() != size()) {
    throw ConfigError("mutable mask length does not match the schema");
  }
  PermutationDomain out = *this;
  out.mask_ = std::move(mutable_mask);
  return out;
}

std::vector<std::size_t> PermutationDomain::mutable_features() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(i);
  }
  return out;
}

std::size_t ConditionalIndex::KeyHash::operator()(
    const std::vector<int>& key) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : key) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

ConditionalIndex::ConditionalIndex(const Dataset& train) : schema_(train.schema) {
  if (train.rows.empty()) throw DataError("conditional index needs training rows");
  const std::size_t m = schema_.size();
  bins_.reserve(train.n_rows());
  values_.reserve(train.n_rows());
  for (const auto& row : train.rows) {
    bins_.push_back(bins_of(schema_, row));
    values_.push_back(row.values);
  }
  column_bins_.resize(bins_.size() * m);
  for (std::size_t r = 0; r < bins_.size(); ++r) {
    for (std::size_t j = 0; j < m; ++j) column_bins_[j * bins_.size() + r] = bins_[r][j];
  }
  relax_cache_ = std::make_shared<RelaxCache>();
  contexts_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < bins_.size(); ++r) {
      std::vector<int> key = bins_[r];
      key[i] = -1;
      contexts_[i][std::move(key)].push_back(r);
    }
  }
}

std::vector<std::size_t> ConditionalIndex::conditional_rows(
    const Instance& instance, std::size_t feature) const {
  std::vector<int> key = bins_of(schema_, instance);
  key[feature] = -1;
  const auto it = contexts_[feature].find(key);
  if (it != contexts_[feature].end()) return it->second;
  {
    std::lock_guard<std::mutex> lock(relax_cache_->mutex);
    const auto hit = relax_cache_->rows.find(key);
    if (hit != relax_cache_->rows.end()) return hit->second;
  }
  auto rows = relaxed_rows(key, feature);
  std::lock_guard<std::mutex> lock(relax_cache_->mutex);
  if (relax_cache_->rows.size() >= kRelaxCacheLimit) relax_cache_->rows.clear();
  relax_cache_->rows.emplace(std::move(key), rows);
  return rows;
}

std::vector<std::size_t> ConditionalIndex::relaxed_rows(
    const std::vector<int>& query, std::size_t feature) const {
  const std::size_t m = schema_.size();
  const std::size_t n = bins_.size();
  std::vector<bool> dropped(m, false);
  dropped[feature] = true;

  // Live mismatch count and total bin distance per row over the conditions
  // still in force.
  std::vector<int> mismatches(n, 0);
  std::vector<int> distance(n, 0);
  for (std::size_t j = 0; j < m; ++j) {
    if (j == feature) continue;
    const int* col = &column_bins_[j * n];
    const int q = query[j];
    for (std::size_t r = 0; r < n; ++r) {
      const int diff = col[r] - q;
      mismatches[r] += diff != 0;
      distance[r] += diff < 0 ? -diff : diff;
    }
  }

  for (;;) {
    std::size_t closest = 0;
    for (std::size_t r = 1; r < n; ++r) {
      if (mismatches[r] < mismatches[closest] ||
          (mismatches[r] == mismatches[closest] && distance[r] < distance[closest])) {
        closest = r;
      }
    }
    std::size_t drop = m;
    int widest = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (dropped[j]) continue;
      const int d = std::abs(column_bins_[j * n + closest] - query[j]);
      if (d > widest) {
        widest = d;
        drop = j;
      }
    }
    // The closest row always has a live mismatch here, otherwise it would
    // already match.
    dropped[drop] = true;
    const int* col = &column_bins_[drop * n];
    const int q = query[drop];
    std::vector<std::size_t> matched;
    for (std::size_t r = 0; r < n; ++r) {
      const int diff = col[r] - q;
      mismatches[r] -= diff != 0;
      distance[r] -= diff < 0 ? -diff : diff;
      if (mismatches[r] == 0) matched.push_back(r);
    }
    if (!matched.empty()) return matched;
  }
}

Instance permute_feature(const Instance& instance, std::size_t feature,
                         const PermutationDomain& domain, Rng& rng) {
  require_mutable(domain, feature);
  const auto values = domain.values(feature);
  if (values.empty()) throw DataError("empty permutation domain");
  Instance out = instance;
  out[feature] = values[rng.index(values.size())];
  return out;
}

std::vector<double> conditional_values(const ConditionalIndex& index,
                                       const Instance& instance,
                                       std::size_t feature) {
  const auto rows = index.conditional_rows(instance, feature);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(index.value(r, feature));
  return out;
}

Instance gibbs_perturb(const ConditionalIndex& index,
                       const PermutationDomain& domain, const Instance& instance,
                       std::span<const std::size_t> features, int n_iter,
                       Rng& rng) {
  if (features.empty()) throw ConfigError("gibbs_perturb needs at least one feature");
  if (n_iter < 1) throw ConfigError("gibbs iterations must be at least 1");
  for (std::size_t f : features) require_mutable(domain, f);

  Instance x = instance;
  for (std::size_t f : features) {
    const auto values = domain.values(f);
    x[f] = values[rng.index(values.size())];
  }
  std::vector<std::size_t> order(features.begin(), features.end());
  for (int it = 0; it < n_iter; ++it) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[rng.index(k)]);
    }
    for (std::size_t f : order) {
      const auto rows = index.conditional_rows(x, f);
      x[f] = index.value(rows[rng.index(rows.size())], f);
    }
  }
  return x;
}

double nearest_conditional_value(const ConditionalIndex& index,
                                 const Instance& instance, std::size_t feature,
                                 double target, Rng& rng) {
  auto values = conditional_values(index, instance, feature);
  if (index.schema()[feature].kind == FeatureKind::kCategorical) {
    if (std::find(values.begin(), values.end(), target) != values.end()) {
      return target;
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values[rng.index(values.size())];
  }
  double best = values.front();
  double best_gap = std::numeric_limits<double>::infinity();
  for (double v : values) {
    const double gap = std::abs(v - target);
    if (gap < best_gap || (gap == best_gap && v < best)) {
      best = v;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace permuteattack
