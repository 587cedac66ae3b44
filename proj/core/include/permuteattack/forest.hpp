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

// Reference random forest: bootstrap-sampled CART trees with Gini splits on
// one-hot encoded input and soft voting across trees.

#ifndef PERMUTEATTACK_FOREST_HPP_
#define PERMUTEATTACK_FOREST_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "permuteattack/model.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack {

struct ForestParams {
  int n_trees = 10;
  int max_depth = 32;
  int min_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  // Internal node: go left when x[feature] <= threshold.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaf only: bootstrap-weighted class counts.
  std::vector<double> counts;

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const TreeNode& leaf_for(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel {
 public:
  static constexpr int kFormatVersion = 1;

  ForestModel() = default;
  ForestModel(ForestParams params, std::size_t feature_width,
              std::size_t n_classes, std::vector<DecisionTree> trees);

  // Mean of per-tree leaf class frequencies.
  ProbabilityVector predict(std::span<const double> encoded) const;

  const ForestParams& params() const { return params_; }
  std::size_t feature_width() const { return feature_width_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_trees() const { return trees_.size(); }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& doc);

 private:
  ForestParams params_;
  std::size_t feature_width_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

// Trains on an already-encoded design matrix.
ForestModel train_forest(const std::vector<std::vector<double>>& features,
                         std::span<const int> labels, std::size_t n_classes,
                         const ForestParams& params);

// Trains on the one-hot encoding of `dataset`.
ForestModel train_forest(const Dataset& dataset, const ForestParams& params);

class ForestClassifier final : public Classifier {
 public:
  ForestClassifier(ForestModel model, Schema schema);

  std::vector<ProbabilityVector> predict_proba(
      std::span<const Instance> batch) override;
  std::size_t n_classes() const override { return model_.n_classes(); }
  ModelBackend backend() const override { return ModelBackend::kBuiltinForest; }
  InputEncoding encoding() const override { return InputEncoding::kOneHot; }
  bool concurrent_safe() const override { return true; }

  const ForestModel& model() const { return model_; }
  const Schema& schema() const { return schema_; }

 private:
  ForestModel model_;
  Schema schema_;
};

// Fraction of rows whose argmax prediction equals the label.
double accuracy(Classifier& model, const Dataset& dataset);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_FOREST_HPP_
