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

// Tabular data representation: schema inference, ordinal/one-hot encoding
// and equal-frequency discretization.
//
// Every row is stored in "ordinal space": categorical cells hold the index
// of their level, ordinal and continuous cells hold the raw numeric value.
// Models that want indicator columns call to_onehot at the predict boundary.

#ifndef PERMUTEATTACK_TABULAR_HPP_
#define PERMUTEATTACK_TABULAR_HPP_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace permuteattack {

enum class FeatureKind { kContinuous, kOrdinal, kCategorical };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Distinct raw values. Categorical: lexicographic. Ordinal: numeric order,
  // with `level_values` holding the parsed numbers.
  std::vector<std::string> levels;
  std::vector<double> level_values;
  // Continuous only: inclusive upper bound of every bin except the last.
  // Empty means a single bin.
  std::vector<double> bin_edges;
  // Continuous only: observed training range.
  double min = 0.0;
  double max = 0.0;
  bool is_mutable = true;

  bool is_discrete() const { return kind != FeatureKind::kContinuous; }
  std::size_t onehot_width() const {
    return kind == FeatureKind::kCategorical ? levels.size() : 1;
  }
  std::size_t n_bins() const {
    return is_discrete() ? levels.size() : bin_edges.size() + 1;
  }
};

struct Schema {
  std::vector<FeatureSchema> features;

  std::size_t size() const { return features.size(); }
  const FeatureSchema& operator[](std::size_t i) const { return features[i]; }
  FeatureSchema& operator[](std::size_t i) { return features[i]; }

  std::size_t onehot_width() const;
  std::size_t categorical_count() const;
  // Throws DataError if no feature has this name.
  std::size_t index_of(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
};

struct Instance {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Dataset {
  Schema schema;
  std::vector<Instance> rows;
  std::vector<int> labels;
  std::string target_name;
  // Raw target values; labels index into this list.
  std::vector<std::string> class_names;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_features() const { return schema.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  // Returns the column of feature i as a flat vector.
  std::vector<double> column(std::size_t i) const;
};

struct DiscretizedView {
  std::vector<std::vector<int>> rows;
  std::vector<int> bins_per_feature;
};

struct CsvOptions {
  char delimiter = ',';
  // Numeric columns with more distinct values than this become continuous.
  int ordinal_threshold = 12;
  std::map<std::string, FeatureKind, std::less<>> kind_overrides;
};

Dataset load_csv(const std::string& path, std::string_view target_column,
                 const CsvOptions& options = {});
Dataset parse_csv(std::istream& in, std::string_view target_column,
                  const CsvOptions& options = {});

// Throws DataError when the instance does not conform to the schema.
void validate_instance(const Schema& schema, const Instance& instance);

std::vector<double> to_onehot(const Instance& instance, const Schema& schema);
Instance from_onehot(std::span<const double> encoded, const Schema& schema);

// Equal-frequency cut points for one column. Values equal to an edge fall
// in the lower bin. Columns with at most n_bins distinct values get one bin
// per distinct value.
std::vector<double> quantile_bin_edges(std::vector<double> column, int n_bins);

// Computes bin edges for every continuous column, stores them back into
// dataset.schema and returns the binned rows.
DiscretizedView discretize(Dataset& dataset, int n_bins);

// Bin (continuous) or level index (discrete) of a single value.
int bin_of(const FeatureSchema& feature, double value);
std::vector<int> bins_of(const Schema& schema, const Instance& instance);

// Human-readable raw value: level string for categorical, number otherwise.
std::string format_value(const FeatureSchema& feature, double value);
// Inverse of format_value. Throws DataError on unknown levels.
double parse_value(const FeatureSchema& feature, std::string_view raw);

// Shortest round-trip decimal representation ("1", "0.5", "1e-07").
std::string format_number(double value);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// Seeded shuffle, first round(train_fraction * n) rows go to train.
TrainTestSplit split_dataset(const Dataset& dataset, double train_fraction,
                             std::uint64_t seed);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& doc);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_TABULAR_HPP_
