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

#include "permuteattack/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "permuteattack/error.hpp"
#include "permuteattack/rng.hpp"

namespace permuteattack {
namespace {

constexpr double kGainEpsilon = 1e-12;

double gini(std::span<const double> counts, double total) {
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

struct SplitCandidate {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;

  bool better_than(const SplitCandidate& other) const {
    if (!other.valid) return valid;
    if (gain > other.gain + kGainEpsilon) return true;
    if (gain < other.gain - kGainEpsilon) return false;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, std::span<const int> y,
              std::size_t n_classes, const ForestParams& params, Rng& rng)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), rng_(rng) {
    width_ = x.empty() ? 0 : x.front().size();
    mtry_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width_)))));
  }

  std::vector<TreeNode> build(std::vector<std::size_t> samples,
                              std::vector<double> weights) {
    weights_ = std::move(weights);
    nodes_.clear();
    grow(std::move(samples), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<double> counts(n_classes_, 0.0);
    double total = 0.0;
    for (std::size_t s : samples) {
      counts[static_cast<std::size_t>(y_[s])] += weights_[s];
      total += weights_[s];
    }
    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    SplitCandidate split;
    if (!pure && depth < params_.max_depth &&
        total >= 2.0 * params_.min_leaf) {
      split = find_split(samples, counts, total);
    }
    if (!split.valid) {
      nodes_[id].counts = std::move(counts);
      return id;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t s : samples) {
      (x_[s][split.feature] <= split.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = nodes_[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Visits features in random order until `mtry_` non-constant ones have
  // been scored and at least one valid split exists.
  SplitCandidate find_split(const std::vector<std::size_t>& samples,
                            const std::vector<double>& parent_counts,
                            double total) {
    std::vector<std::size_t> order(width_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = width_; i > 1; --i) {
      std::swap(order[i - 1], order[rng_.index(i)]);
    }
    const double parent_impurity = gini(parent_counts, total);

    SplitCandidate best;
    std::size_t scored = 0;
    std::vector<std::pair<double, std::size_t>> column(samples.size());
    for (std::size_t f : order) {
      if (scored >= mtry_ && best.valid) break;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        column[k] = {x_[samples[k]][f], samples[k]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++scored;

      std::vector<double> left(n_classes_, 0.0);
      std::vector<double> right = parent_counts;
      double wl = 0.0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        const std::size_t s = column[k].second;
        const double w = weights_[s];
        left[static_cast<std::size_t>(y_[s])] += w;
        right[static_cast<std::size_t>(y_[s])] -= w;
        wl += w;
        const double lo = column[k].first;
        const double hi = column[k + 1].first;
        if (lo == hi) continue;
        const double wr = total - wl;
        if (wl < params_.min_leaf || wr < params_.min_leaf) continue;
        const double child = (wl * gini(left, wl) + wr * gini(right, wr)) / total;
        SplitCandidate c;
        c.valid = true;
        c.feature = static_cast<int>(f);
        c.threshold = lo + (hi - lo) / 2.0;
        if (c.threshold >= hi) c.threshold = lo;
        c.gain = parent_impurity - child;
        if (c.gain <= kGainEpsilon) continue;
        if (c.better_than(best)) best = c;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t width_ = 0;
  std::size_t mtry_ = 1;
  std::vector<double> weights_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

void ForestParams::validate() const {
  if (n_trees <= 0) throw ConfigError("n_trees must be positive");
  if (max_depth <= 0) throw ConfigError("max_depth must be positive");
  if (min_leaf <= 0) throw ConfigError("min_leaf must be positive");
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                      : node->right)];
  }
  return *node;
}

ForestModel::ForestModel(ForestParams params, std::size_t feature_width,
                         std::size_t n_classes, std::vector<DecisionTree> trees)
    : params_(params),
      feature_width_(feature_width),
      n_classes_(n_classes),
      trees_(std::move(trees)) {}

ProbabilityVector ForestModel::predict(std::span<const double> encoded) const {
  if (encoded.size() != feature_width_) {
    throw BackendError("forest expects " + std::to_string(feature_width_) +
                       " inputs, got " + std::to_string(encoded.size()));
  }
  ProbabilityVector probs(n_classes_, 0.0);
  for (const auto& tree : trees_) {
    const auto& counts = tree.leaf_for(encoded).counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    for (std::size_t k = 0; k < n_classes_; ++k) probs[k] += counts[k] / total;
  }
  for (double& p : probs) p /= static_cast<double>(trees_.size());
  return probs;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"counts", n.counts}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"format", "permuteattack.forest"},
          {"version", kFormatVersion},
          {"params",
           {{"n_trees", params_.n_trees},
            {"max_depth", params_.max_depth},
            {"min_leaf", params_.min_leaf},
            {"seed", params_.seed}}},
          {"feature_width", feature_width_},
          {"n_classes", n_classes_},
          {"trees", std::move(trees)}};
}

ForestModel ForestModel::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw DataError("unsupported forest format version");
    }
    ForestParams params;
    const auto& p = doc.at("params");
    params.n_trees = p.at("n_trees").get<int>();
    params.max_depth = p.at("max_depth").get<int>();
    params.min_leaf = p.at("min_leaf").get<int>();
    params.seed = p.at("seed").get<std::uint64_t>();
    const auto width = doc.at("feature_width").get<std::size_t>();
    const auto n_classes = doc.at("n_classes").get<std::size_t>();

    std::vector<DecisionTree> trees;
    for (const auto& jt : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("counts")) {
          n.counts = jn.at("counts").get<std::vector<double>>();
          const double total = std::accumulate(n.counts.begin(), n.counts.end(), 0.0);
          if (n.counts.size() != n_classes || total <= 0.0 ||
              std::any_of(n.counts.begin(), n.counts.end(),
                          [](double c) { return c < 0.0; })) {
            throw DataError("forest leaf has invalid class counts");
          }
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= width) {
            throw DataError("forest split feature out of range");
          }
        }
        nodes.push_back(std::move(n));
      }
      for (const auto& n : nodes) {
        if (!n.is_leaf() &&
            (n.left <= 0 || n.right <= 0 ||
             static_cast<std::size_t>(std::max(n.left, n.right)) >= nodes.size())) {
          throw DataError("forest node child index out of range");
        }
      }
      if (nodes.empty()) throw DataError("forest tree has no nodes");
      trees.emplace_back(std::move(nodes));
    }
    if (trees.empty()) throw DataError("forest has no trees");
    return ForestModel(params, width, n_classes, std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed forest document: ") + e.what());
  }
}

ForestModel train_forest(const std::vector<std::vector<double>>& features,
                         std::span<const int> labels, std::size_t n_classes,
                         const ForestParams& params) {
  params.validate();
  if (features.empty()) throw DataError("cannot train on an empty dataset");
  if (features.size() != labels.size()) {
    throw DataError("feature rows and labels differ in length");
  }
  std::vector<bool> present(n_classes, false);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw DataError("label out of range");
    }
    present[static_cast<std::size_t>(y)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw DataError("training data contains a single class");
  }

  const std::size_t n = features.size();
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<double> weights(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) weights[rng.index(n)] += 1.0;
    std::vector<std::size_t> samples;
    for (std::size_t k = 0; k < n; ++k) {
      if (weights[k] > 0.0) samples.push_back(k);
    }
    TreeBuilder builder(features, labels, n_classes, params, rng);
    trees.emplace_back(builder.build(std::move(samples), std::move(weights)));
  }
  return ForestModel(params, features.front().size(), n_classes, std::move(trees));
}

ForestModel train_forest(const Dataset& dataset, const ForestParams& params) {
  if (dataset.rows.empty()) throw DataError("cannot train on an empty dataset");
  auto encoded = encode_batch(dataset.schema, dataset.rows, InputEncoding::kOneHot);
  return train_forest(encoded, dataset.labels, dataset.n_classes(), params);
}

ForestClassifier::ForestClassifier(ForestModel model, Schema schema)
    : model_(std::move(model)), schema_(std::move(schema)) {
  if (schema_.onehot_width() != model_.feature_width()) {
    throw ConfigError("model expects " + std::to_string(model_.feature_width()) +
                      " one-hot inputs but the schema encodes to " +
                      std::to_string(schema_.onehot_width()));
  }
}

std::vector<ProbabilityVector> ForestClassifier::predict_proba(
    std::span<const Instance> batch) {
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const auto& instance : batch) {
    out.push_back(model_.predict(to_onehot(instance, schema_)));
  }
  return out;
}

double accuracy(Classifier& model, const Dataset& dataset) {
  if (dataset.rows.empty()) return 0.0;
  const auto probs = model.predict_proba(dataset.rows);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int>(argmax(probs[i])) == dataset.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.rows.size());
}

}  // namespace permuteattack
