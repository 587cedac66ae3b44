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

#include "permuteattack/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <system_error>
#include <utility>

#include "permuteattack/error.hpp"
#include "permuteattack/rng.hpp"

namespace permuteattack {
namespace {

constexpr int kSchemaVersion = 1;

std::optional<double> parse_number(std::string_view text) {
  // from_chars rejects a leading '+', which spreadsheets like to emit.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

// RFC 4180 style record reader: quoted fields may contain the delimiter,
// doubled quotes and newlines.
bool read_record(std::istream& in, char delimiter,
                 std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field in CSV input");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool is_blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && fields[0].empty();
}

std::vector<std::string> sorted_numeric_levels(
    const std::vector<double>& values, std::vector<double>& numbers) {
  numbers = values;
  std::sort(numbers.begin(), numbers.end());
  numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
  std::vector<std::string> levels;
  levels.reserve(numbers.size());
  for (double v : numbers) levels.push_back(format_number(v));
  return levels;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kContinuous:
      return "continuous";
    case FeatureKind::kOrdinal:
      return "ordinal";
    case FeatureKind::kCategorical:
      return "categorical";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "continuous") return FeatureKind::kContinuous;
  if (name == "ordinal") return FeatureKind::kOrdinal;
  if (name == "categorical") return FeatureKind::kCategorical;
  throw ConfigError("unknown feature kind '" + std::string(name) + "'");
}

std::size_t Schema::onehot_width() const {
  std::size_t width = 0;
  for (const auto& f : features) width += f.onehot_width();
  return width;
}

std::size_t Schema::categorical_count() const {
  return static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(), [](const auto& f) {
        return f.kind == FeatureKind::kCategorical;
      }));
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("unknown feature '" + std::string(name) + "'");
}

std::vector<double> Dataset::column(std::size_t i) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[i]);
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

Dataset load_csv(const std::string& path, std::string_view target_column,
                 const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return parse_csv(in, target_column, options);
}

Dataset parse_csv(std::istream& in, std::string_view target_column,
                  const CsvOptions& options) {
  std::vector<std::string> header;
  if (!read_record(in, options.delimiter, header) || is_blank(header)) {
    throw DataError("CSV input has no header row");
  }
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) {
    throw DataError("target column '" + std::string(target_column) +
                    "' not found in header");
  }
  const std::size_t target_col =
      static_cast<std::size_t>(target_it - header.begin());
  for (const auto& [name, kind] : options.kind_overrides) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw ConfigError("kind override for unknown column '" + name + "'");
    }
  }

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> record;
  std::size_t line = 1;
  while (read_record(in, options.delimiter, record)) {
    ++line;
    if (is_blank(record)) continue;
    if (record.size() != header.size()) {
      throw DataError("line " + std::to_string(line) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(record.size()));
    }
    for (std::size_t c = 0; c < record.size(); ++c) {
      if (record[c].empty()) {
        throw DataError("line " + std::to_string(line) + ": missing value in column '" +
                        header[c] + "'");
      }
    }
    cells.push_back(record);
  }
  if (cells.empty()) throw DataError("dataset has no rows");

  const std::size_t n = cells.size();
  Dataset ds;
  ds.target_name = std::string(target_column);
  ds.rows.assign(n, Instance{});

  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_col) continue;
    FeatureSchema f;
    f.name = header[c];

    std::vector<double> numbers(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n && numeric; ++r) {
      auto v = parse_number(cells[r][c]);
      if (!v) {
        numeric = false;
      } else {
        numbers[r] = *v;
      }
    }

    const auto override_it = options.kind_overrides.find(f.name);
    if (override_it != options.kind_overrides.end()) {
      f.kind = override_it->second;
    } else if (!numeric) {
      f.kind = FeatureKind::kCategorical;
    } else {
      std::set<double> distinct(numbers.begin(), numbers.end());
      f.kind = static_cast<int>(distinct.size()) > options.ordinal_threshold
                   ? FeatureKind::kContinuous
                   : FeatureKind::kOrdinal;
    }
    if (f.kind != FeatureKind::kCategorical && !numeric) {
      for (std::size_t r = 0; r < n; ++r) {
        if (!parse_number(cells[r][c])) {
          throw DataError("non-numeric value '" + cells[r][c] +
                          "' in numeric column '" + f.name + "'");
        }
      }
    }
    if (f.kind != FeatureKind::kCategorical) {
      for (double v : numbers) {
        if (!std::isfinite(v)) {
          throw DataError("non-finite value in column '" + f.name + "'");
        }
      }
    }

    switch (f.kind) {
      case FeatureKind::kCategorical: {
        std::set<std::string> distinct;
        for (std::size_t r = 0; r < n; ++r) distinct.insert(cells[r][c]);
        f.levels.assign(distinct.begin(), distinct.end());
        for (std::size_t r = 0; r < n; ++r) {
          const auto it =
              std::lower_bound(f.levels.begin(), f.levels.end(), cells[r][c]);
          ds.rows[r].values.push_back(
              static_cast<double>(it - f.levels.begin()));
        }
        break;
      }
      case FeatureKind::kOrdinal:
        f.levels = sorted_numeric_levels(numbers, f.level_values);
        for (std::size_t r = 0; r < n; ++r) ds.rows[r].values.push_back(numbers[r]);
        break;
      case FeatureKind::kContinuous: {
        const auto [lo, hi] = std::minmax_element(numbers.begin(), numbers.end());
        f.min = *lo;
        f.max = *hi;
        for (std::size_t r = 0; r < n; ++r) ds.rows[r].values.push_back(numbers[r]);
        break;
      }
    }
    ds.schema.features.push_back(std::move(f));
  }

  // Target classes: numeric order when every label parses, else lexicographic.
  std::vector<std::string> raw(n);
  bool numeric_target = true;
  for (std::size_t r = 0; r < n; ++r) {
    raw[r] = cells[r][target_col];
    numeric_target = numeric_target && parse_number(raw[r]).has_value();
  }
  std::vector<std::string> classes = raw;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (numeric_target) {
    std::stable_sort(classes.begin(), classes.end(),
                     [](const std::string& a, const std::string& b) {
                       return *parse_number(a) < *parse_number(b);
                     });
  }
  ds.class_names = classes;
  ds.labels.reserve(n);
  for (const auto& value : raw) {
    ds.labels.push_back(static_cast<int>(
        std::find(classes.begin(), classes.end(), value) - classes.begin()));
  }
  return ds;
}

void validate_instance(const Schema& schema, const Instance& instance) {
  if (instance.size() != schema.size()) {
    throw DataError("instance has " + std::to_string(instance.size()) +
                    " values, schema has " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    const double v = instance[i];
    if (!std::isfinite(v)) {
      throw DataError("non-finite value for feature '" + f.name + "'");
    }
    switch (f.kind) {
      case FeatureKind::kCategorical:
        if (v < 0 || v >= static_cast<double>(f.levels.size()) ||
            v != std::floor(v)) {
          throw DataError("level index " + format_number(v) +
                          " out of range for feature '" + f.name + "'");
        }
        break;
      case FeatureKind::kOrdinal:
        if (!std::binary_search(f.level_values.begin(), f.level_values.end(), v)) {
          throw DataError("value " + format_number(v) +
                          " is not a level of ordinal feature '" + f.name + "'");
        }
        break;
      case FeatureKind::kContinuous:
        break;
    }
  }
}

std::vector<double> to_onehot(const Instance& instance, const Schema& schema) {
  validate_instance(schema, instance);
  std::vector<double> out;
  out.reserve(schema.onehot_width());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.kind == FeatureKind::kCategorical) {
      const auto level = static_cast<std::size_t>(instance[i]);
      for (std::size_t l = 0; l < f.levels.size(); ++l) {
        out.push_back(l == level ? 1.0 : 0.0);
      }
    } else {
      out.push_back(instance[i]);
    }
  }
  return out;
}

Instance from_onehot(std::span<const double> encoded, const Schema& schema) {
  if (encoded.size() != schema.onehot_width()) {
    throw DataError("one-hot vector has length " + std::to_string(encoded.size()) +
                    ", schema expects " + std::to_string(schema.onehot_width()));
  }
  Instance out;
  out.values.reserve(schema.size());
  std::size_t pos = 0;
  for (const auto& f : schema.features) {
    if (f.kind != FeatureKind::kCategorical) {
      out.values.push_back(encoded[pos++]);
      continue;
    }
    std::optional<std::size_t> hot;
    for (std::size_t l = 0; l < f.levels.size(); ++l) {
      const double v = encoded[pos + l];
      if (v == 1.0) {
        if (hot) {
          throw DataError("one-hot block for '" + f.name +
                          "' has more than one indicator set");
        }
        hot = l;
      } else if (v != 0.0) {
        throw DataError("one-hot block for '" + f.name +
                        "' contains a non-indicator value");
      }
    }
    if (!hot) {
      throw DataError("one-hot block for '" + f.name + "' has no indicator set");
    }
    out.values.push_back(static_cast<double>(*hot));
    pos += f.levels.size();
  }
  validate_instance(schema, out);
  return out;
}

std::vector<double> quantile_bin_edges(std::vector<double> column, int n_bins) {
  if (n_bins < 2) throw ConfigError("n_bins must be at least 2");
  if (column.empty()) throw DataError("cannot discretize an empty column");
  std::sort(column.begin(), column.end());
  std::vector<double> distinct = column;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> edges;
  if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
    edges.assign(distinct.begin(), distinct.end() - 1);
    return edges;
  }
  const std::size_t n = column.size();
  const auto bins = static_cast<std::size_t>(n_bins);
  for (std::size_t k = 1; k < bins; ++k) {
    // Last row of bin k-1 under an equal-count split.
    const std::size_t pos = (k * n + bins - 1) / bins - 1;
    const double edge = column[pos];
    if (edge >= column.back()) break;
    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
  }
  return edges;
}

int bin_of(const FeatureSchema& feature, double value) {
  switch (feature.kind) {
    case FeatureKind::kCategorical:
      return static_cast<int>(value);
    case FeatureKind::kOrdinal: {
      const auto& lv = feature.level_values;
      auto it = std::lower_bound(lv.begin(), lv.end(), value);
      if (it == lv.end()) --it;
      return static_cast<int>(it - lv.begin());
    }
    case FeatureKind::kContinuous: {
      const auto& e = feature.bin_edges;
      return static_cast<int>(std::lower_bound(e.begin(), e.end(), value) -
                              e.begin());
    }
  }
  return 0;
}

std::vector<int> bins_of(const Schema& schema, const Instance& instance) {
  std::vector<int> out(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    out[i] = bin_of(schema[i], instance[i]);
  }
  return out;
}

DiscretizedView discretize(Dataset& dataset, int n_bins) {
  if (n_bins < 2) throw ConfigError("n_bins must be at least 2");
  if (dataset.rows.empty()) throw DataError("cannot discretize an empty dataset");
  for (std::size_t i = 0; i < dataset.n_features(); ++i) {
    auto& f = dataset.schema[i];
    if (f.kind == FeatureKind::kContinuous) {
      f.bin_edges = quantile_bin_edges(dataset.column(i), n_bins);
    }
  }
  DiscretizedView view;
  view.rows.reserve(dataset.n_rows());
  for (const auto& row : dataset.rows) {
    view.rows.push_back(bins_of(dataset.schema, row));
  }
  for (const auto& f : dataset.schema.features) {
    view.bins_per_feature.push_back(static_cast<int>(f.n_bins()));
  }
  return view;
}

std::string format_value(const FeatureSchema& feature, double value) {
  if (feature.kind == FeatureKind::kCategorical) {
    const auto i = static_cast<std::size_t>(value);
    if (value < 0 || i >= feature.levels.size()) {
      throw DataError("level index out of range for '" + feature.name + "'");
    }
    return feature.levels[i];
  }
  return format_number(value);
}

double parse_value(const FeatureSchema& feature, std::string_view raw) {
  if (feature.kind == FeatureKind::kCategorical) {
    const auto it = std::find(feature.levels.begin(), feature.levels.end(), raw);
    if (it == feature.levels.end()) {
      throw DataError("unknown level '" + std::string(raw) + "' for feature '" +
                      feature.name + "'");
    }
    return static_cast<double>(it - feature.levels.begin());
  }
  auto v = parse_number(raw);
  if (!v) {
    throw DataError("non-numeric value '" + std::string(raw) + "' for feature '" +
                    feature.name + "'");
  }
  if (feature.kind == FeatureKind::kOrdinal &&
      !std::binary_search(feature.level_values.begin(),
                          feature.level_values.end(), *v)) {
    throw DataError("value '" + std::string(raw) +
                    "' is not a level of ordinal feature '" + feature.name + "'");
  }
  return *v;
}

TrainTestSplit split_dataset(const Dataset& dataset, double train_fraction,
                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.n_rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

  TrainTestSplit split;
  split.train_rows.assign(order.begin(), order.begin() + n_train);
  split.test_rows.assign(order.begin() + n_train, order.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());

  auto take = [&](const std::vector<std::size_t>& idx) {
    Dataset part;
    part.schema = dataset.schema;
    part.target_name = dataset.target_name;
    part.class_names = dataset.class_names;
    for (std::size_t r : idx) {
      part.rows.push_back(dataset.rows[r]);
      part.labels.push_back(dataset.labels[r]);
    }
    return part;
  };
  split.train = take(split.train_rows);
  split.test = take(split.test_rows);
  return split;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features) {
    nlohmann::json j;
    j["name"] = f.name;
    j["kind"] = to_string(f.kind);
    j["mutable"] = f.is_mutable;
    if (f.kind == FeatureKind::kCategorical) {
      j["levels"] = f.levels;
    } else if (f.kind == FeatureKind::kOrdinal) {
      j["levels"] = f.level_values;
    } else {
      j["bin_edges"] = f.bin_edges;
      j["min"] = f.min;
      j["max"] = f.max;
    }
    features.push_back(std::move(j));
  }
  return {{"format", "permuteattack.schema"},
          {"version", kSchemaVersion},
          {"features", std::move(features)}};
}

Schema schema_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kSchemaVersion) {
      throw DataError("unsupported schema version");
    }
    Schema schema;
    for (const auto& j : doc.at("features")) {
      FeatureSchema f;
      f.name = j.at("name").get<std::string>();
      f.kind = parse_feature_kind(j.at("kind").get<std::string>());
      f.is_mutable = j.value("mutable", true);
      if (f.kind == FeatureKind::kCategorical) {
        f.levels = j.at("levels").get<std::vector<std::string>>();
      } else if (f.kind == FeatureKind::kOrdinal) {
        f.level_values = j.at("levels").get<std::vector<double>>();
        for (double v : f.level_values) f.levels.push_back(format_number(v));
      } else {
        f.bin_edges = j.value("bin_edges", std::vector<double>{});
        f.min = j.value("min", 0.0);
        f.max = j.value("max", 0.0);
      }
      if (f.is_discrete() && f.levels.empty()) {
        throw DataError("feature '" + f.name + "' has no levels");
      }
      if (!std::is_sorted(f.bin_edges.begin(), f.bin_edges.end()) ||
          std::adjacent_find(f.bin_edges.begin(), f.bin_edges.end()) !=
              f.bin_edges.end()) {
        throw DataError("bin edges of '" + f.name + "' are not strictly ascending");
      }
      schema.features.push_back(std::move(f));
    }
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema document: ") + e.what());
  }
}

}  // namespace permuteattack
