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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "permuteattack/error.hpp"
#include "permuteattack/rng.hpp"
#include "permuteattack/tabular.hpp"
#include "test_util.hpp"

namespace permuteattack {
namespace {

using testing::parse_text;

TEST(ParseCsvTest, InfersSchemaFromSmallFile) {
  const Dataset ds = parse_text("age,job,label\n30,skilled,0\n45,unskilled,1\n22,skilled,0\n");
  ASSERT_EQ(ds.n_features(), 2u);
  EXPECT_EQ(ds.n_rows(), 3u);
  EXPECT_EQ(ds.schema[0].name, "age");
  EXPECT_EQ(ds.schema[0].kind, FeatureKind::kOrdinal);
  EXPECT_EQ(ds.schema[1].kind, FeatureKind::kCategorical);
  EXPECT_EQ(ds.schema[1].levels, (std::vector<std::string>{"skilled", "unskilled"}));
  EXPECT_EQ(ds.rows[1][1], 1.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0}));
}

TEST(ParseCsvTest, OrdinalThresholdSeparatesContinuous) {
  std::string twelve = "x,label\n";
  std::string thirteen = "x,label\n";
  for (int i = 0; i < 12; ++i) twelve += std::to_string(i) + "," + std::to_string(i % 2) + "\n";
  for (int i = 0; i < 13; ++i) thirteen += std::to_string(i) + "," + std::to_string(i % 2) + "\n";
  EXPECT_EQ(parse_text(twelve).schema[0].kind, FeatureKind::kOrdinal);
  EXPECT_EQ(parse_text(thirteen).schema[0].kind, FeatureKind::kContinuous);
}

TEST(ParseCsvTest, KindOverridesWin) {
  CsvOptions opts;
  opts.kind_overrides["x"] = FeatureKind::kCategorical;
  const Dataset ds = parse_text("x,label\n3,0\n10,1\n", "label", opts);
  EXPECT_EQ(ds.schema[0].kind, FeatureKind::kCategorical);
  // Lexicographic, not numeric.
  EXPECT_EQ(ds.schema[0].levels, (std::vector<std::string>{"10", "3"}));
}

TEST(ParseCsvTest, QuotedFieldsMayContainDelimitersAndQuotes) {
  const Dataset ds =
      parse_text("a,b,label\n\"x, y\",\"say \"\"hi\"\"\",0\nz,w,1\n");
  EXPECT_EQ(ds.schema[0].levels, (std::vector<std::string>{"x, y", "z"}));
  EXPECT_EQ(ds.schema[1].levels, (std::vector<std::string>{"say \"hi\"", "w"}));
}

TEST(ParseCsvTest, CustomDelimiter) {
  CsvOptions opts;
  opts.delimiter = ';';
  const Dataset ds = parse_text("a;label\n1.5;0\n2.5;1\n", "label", opts);
  EXPECT_EQ(ds.rows[1][0], 2.5);
}

TEST(ParseCsvTest, ConstantColumnIsNotAnError) {
  const Dataset ds = parse_text("c,k,label\n7,a,0\n7,a,1\n7,a,0\n");
  EXPECT_EQ(ds.schema[0].levels.size(), 1u);
  EXPECT_EQ(ds.schema[1].levels.size(), 1u);
  CsvOptions opts;
  opts.kind_overrides["c"] = FeatureKind::kContinuous;
  const Dataset cont = parse_text("c,label\n7,0\n7,1\n", "label", opts);
  EXPECT_EQ(cont.schema[0].min, 7.0);
  EXPECT_EQ(cont.schema[0].max, 7.0);
}

TEST(ParseCsvTest, NumericClassLabelsSortNumerically) {
  const Dataset ds = parse_text("x,label\n1,10\n2,9\n3,10\n");
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"9", "10"}));
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0, 1}));
}

TEST(ParseCsvTest, MissingTargetColumnNamesIt) {
  try {
    parse_text("a,b\n1,2\n", "outcome");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("outcome"), std::string::npos);
  }
}

TEST(ParseCsvTest, RejectsMissingValues) {
  EXPECT_THROW(parse_text("a,b,label\n1,,0\n"), DataError);
}

TEST(ParseCsvTest, RejectsRaggedRows) {
  EXPECT_THROW(parse_text("a,b,label\n1,2\n"), DataError);
}

TEST(ParseCsvTest, RejectsEmptyDataset) {
  EXPECT_THROW(parse_text("a,label\n"), DataError);
  EXPECT_THROW(parse_text(""), DataError);
}

TEST(ParseCsvTest, RejectsTextInNumericColumn) {
  CsvOptions opts;
  opts.kind_overrides["a"] = FeatureKind::kContinuous;
  EXPECT_THROW(parse_text("a,label\n1,0\nabc,1\n", "label", opts), DataError);
}

TEST(ParseCsvTest, MissingFileIsADataError) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", "label"), DataError);
}

TEST(ParseCsvTest, InferenceIsDeterministic) {
  const std::string csv = "b,a,n,label\nz,1,0.5,x\ny,2,0.25,y\nz,3,0.75,x\n";
  EXPECT_EQ(schema_to_json(parse_text(csv).schema), schema_to_json(parse_text(csv).schema));
}

TEST(OneHotTest, CategoricalExpandsToIndicators) {
  const Dataset ds = parse_text("c,label\nb,0\na,1\nc,0\n");
  const Instance x{{1.0}};
  EXPECT_EQ(to_onehot(x, ds.schema), (std::vector<double>{0, 1, 0}));
  const std::vector<double> block{0, 1, 0};
  EXPECT_EQ(from_onehot(block, ds.schema), x);
}

TEST(OneHotTest, AllNumericInstanceIsUnchanged) {
  const Dataset ds = parse_text("a,b,label\n1.5,2,0\n2.5,3,1\n");
  const Instance x{{2.5, 3.0}};
  EXPECT_EQ(to_onehot(x, ds.schema), x.values);
}

TEST(OneHotTest, RejectsMalformedBlocks) {
  const Dataset ds = parse_text("c,label\nb,0\na,1\nc,0\n");
  const std::vector<double> two{1, 1, 0};
  const std::vector<double> none{0, 0, 0};
  const std::vector<double> short_vec{1, 0};
  EXPECT_THROW(from_onehot(two, ds.schema), DataError);
  EXPECT_THROW(from_onehot(none, ds.schema), DataError);
  EXPECT_THROW(from_onehot(short_vec, ds.schema), DataError);
}

TEST(OneHotTest, RejectsOutOfRangeLevel) {
  const Dataset ds = parse_text("c,label\nb,0\na,1\n");
  EXPECT_THROW(to_onehot(Instance{{2.0}}, ds.schema), DataError);
}

// Random schema with every kind, random valid instances: decode(encode(x)) == x.
TEST(OneHotProperty, RoundTripIsIdentity) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Schema schema;
    const std::size_t m = 1 + rng.index(8);
    for (std::size_t i = 0; i < m; ++i) {
      FeatureSchema f;
      f.name = "f" + std::to_string(i);
      const auto kind = rng.index(3);
      if (kind == 0) {
        f.kind = FeatureKind::kContinuous;
        f.min = -5;
        f.max = 5;
      } else if (kind == 1) {
        f.kind = FeatureKind::kOrdinal;
        for (int v = 0; v < 4; ++v) {
          f.level_values.push_back(v * 2.0);
          f.levels.push_back(std::to_string(v * 2));
        }
      } else {
        f.kind = FeatureKind::kCategorical;
        const std::size_t levels = 1 + rng.index(6);
        for (std::size_t l = 0; l < levels; ++l) f.levels.push_back("l" + std::to_string(l));
      }
      schema.features.push_back(f);
    }
    for (int k = 0; k < 100; ++k) {
      Instance x;
      for (const auto& f : schema.features) {
        switch (f.kind) {
          case FeatureKind::kContinuous: x.values.push_back(rng.uniform() * 10 - 5); break;
          case FeatureKind::kOrdinal: x.values.push_back(f.level_values[rng.index(4)]); break;
          case FeatureKind::kCategorical:
            x.values.push_back(static_cast<double>(rng.index(f.levels.size())));
            break;
        }
      }
      const auto encoded = to_onehot(x, schema);
      ASSERT_EQ(encoded.size(), schema.onehot_width());
      ASSERT_EQ(from_onehot(encoded, schema), x);
    }
  }
}

std::vector<int> bins_for(const std::vector<double>& column, int n_bins) {
  FeatureSchema f;
  f.kind = FeatureKind::kContinuous;
  f.bin_edges = quantile_bin_edges(column, n_bins);
  std::vector<int> out;
  for (double v : column) out.push_back(bin_of(f, v));
  return out;
}

TEST(QuantileTest, TenValuesFiveBins) {
  std::vector<double> col(10);
  std::iota(col.begin(), col.end(), 1.0);
  EXPECT_EQ(bins_for(col, 5), (std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4}));
}

TEST(QuantileTest, ConstantColumnIsOneBin) {
  const std::vector<double> col(9, 3.0);
  EXPECT_TRUE(quantile_bin_edges(col, 5).empty());
  EXPECT_EQ(bins_for(col, 5), std::vector<int>(9, 0));
}

TEST(QuantileTest, FewDistinctValuesGetOneBinEach) {
  const std::vector<double> col{1, 1, 2, 2, 2, 9};
  const auto edges = quantile_bin_edges(col, 5);
  EXPECT_EQ(edges, (std::vector<double>{1, 2}));
  EXPECT_EQ(bins_for(col, 5), (std::vector<int>{0, 0, 1, 1, 1, 2}));
}

TEST(QuantileTest, ValueOnAnEdgeGoesToLowerBin) {
  FeatureSchema f;
  f.kind = FeatureKind::kContinuous;
  f.bin_edges = {2.0, 4.0};
  EXPECT_EQ(bin_of(f, 2.0), 0);
  EXPECT_EQ(bin_of(f, 2.0000001), 1);
  EXPECT_EQ(bin_of(f, 4.0), 1);
  EXPECT_EQ(bin_of(f, 100.0), 2);
  EXPECT_EQ(bin_of(f, -100.0), 0);
}

TEST(QuantileTest, RejectsBadInput) {
  EXPECT_THROW(quantile_bin_edges({}, 3), DataError);
  EXPECT_THROW(quantile_bin_edges({1, 2, 3}, 0), ConfigError);
}

// Distinct values: every bin holds floor(n/b) or ceil(n/b) rows, and binning
// is monotone in the raw value.
TEST(QuantileProperty, BalancedWithinOneRowAndMonotone) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.index(500);
    const int b = 2 + static_cast<int>(rng.index(9));
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<double>(i) + rng.uniform() * 0.5;
    for (std::size_t i = n; i > 1; --i) std::swap(col[i - 1], col[rng.index(i)]);

    const auto bins = bins_for(col, b);
    std::map<int, std::size_t> counts;
    for (int v : bins) ++counts[v];
    ASSERT_EQ(counts.size(), static_cast<std::size_t>(b));
    std::size_t lo = n, hi = 0;
    for (const auto& [bin, c] : counts) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    ASSERT_LE(hi - lo, 1u) << "n=" << n << " bins=" << b;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto c) { return col[a] < col[c]; });
    for (std::size_t k = 1; k < n; ++k) ASSERT_LE(bins[order[k - 1]], bins[order[k]]);
  }
}

TEST(DiscretizeTest, StoresEdgesAndPassesDiscreteThrough) {
  std::string csv = "x,c,label\n";
  for (int i = 1; i <= 20; ++i) {
    csv += std::to_string(i) + "." + std::to_string(i % 7) + "," + (i % 2 ? "a" : "b") + ",0\n";
  }
  Dataset ds = parse_text(csv);
  ASSERT_EQ(ds.schema[0].kind, FeatureKind::kContinuous);
  const DiscretizedView view = discretize(ds, 4);
  EXPECT_EQ(ds.schema[0].bin_edges.size(), 3u);
  EXPECT_EQ(view.bins_per_feature, (std::vector<int>{4, 2}));
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    EXPECT_EQ(view.rows[r][1], static_cast<int>(ds.rows[r][1]));
  }
  EXPECT_THROW(discretize(ds, 1), ConfigError);
}

TEST(SplitTest, DeterministicDisjointAndSized) {
  std::string csv = "x,label\n";
  for (int i = 0; i < 101; ++i) csv += std::to_string(i) + "," + std::to_string(i % 2) + "\n";
  const Dataset ds = parse_text(csv);
  const auto a = split_dataset(ds, 0.6, 5);
  const auto b = split_dataset(ds, 0.6, 5);
  const auto c = split_dataset(ds, 0.6, 6);
  EXPECT_EQ(a.train.n_rows(), 61u);
  EXPECT_EQ(a.test.n_rows(), 40u);
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_NE(a.train_rows, c.train_rows);
  std::set<std::size_t> all(a.train_rows.begin(), a.train_rows.end());
  all.insert(a.test_rows.begin(), a.test_rows.end());
  EXPECT_EQ(all.size(), 101u);
  for (std::size_t k = 0; k < a.train_rows.size(); ++k) {
    EXPECT_EQ(a.train.rows[k], ds.rows[a.train_rows[k]]);
    EXPECT_EQ(a.train.labels[k], ds.labels[a.train_rows[k]]);
  }
  EXPECT_THROW(split_dataset(ds, 1.5, 1), ConfigError);
}

TEST(ValidateInstanceTest, RejectsNonConformingInstances) {
  const Dataset ds = parse_text("a,c,label\n1.5,x,0\n2.5,y,1\n");
  ASSERT_EQ(ds.schema[0].kind, FeatureKind::kOrdinal);
  EXPECT_NO_THROW(validate_instance(ds.schema, Instance{{2.5, 1.0}}));
  EXPECT_THROW(validate_instance(ds.schema, Instance{{2.0, 1.0}}), DataError);
  EXPECT_THROW(validate_instance(ds.schema, Instance{{2.5}}), DataError);
  EXPECT_THROW(validate_instance(ds.schema, Instance{{2.5, 2.0}}), DataError);
  EXPECT_THROW(validate_instance(ds.schema, Instance{{2.5, 0.5}}), DataError);
  EXPECT_THROW(
      validate_instance(ds.schema, Instance{{std::numeric_limits<double>::infinity(), 0.0}}),
      DataError);
}

TEST(ValueFormatTest, RoundTripsRawValues) {
  const Dataset ds = parse_text("a,c,o,label\n1.5,x,1,0\n2.25,y,3,1\n");
  EXPECT_EQ(format_value(ds.schema[0], 2.25), "2.25");
  EXPECT_EQ(format_value(ds.schema[1], 1.0), "y");
  EXPECT_EQ(format_value(ds.schema[2], 3.0), "3");
  EXPECT_EQ(parse_value(ds.schema[1], "x"), 0.0);
  EXPECT_EQ(parse_value(ds.schema[2], "3"), 3.0);
  EXPECT_THROW(parse_value(ds.schema[1], "nope"), DataError);
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-2.0), "-2");
}

TEST(SchemaJsonTest, RoundTrip) {
  Dataset ds = parse_text("a,c,o,label\n1.5,x,1,0\n2.25,y,3,1\n3.5,y,3,1\n");
  discretize(ds, 2);
  ds.schema[1].is_mutable = false;
  const auto doc = schema_to_json(ds.schema);
  EXPECT_EQ(doc["format"], "permuteattack.schema");
  const Schema back = schema_from_json(doc);
  EXPECT_EQ(schema_to_json(back), doc);
  EXPECT_FALSE(back[1].is_mutable);
  auto bad = doc;
  bad["version"] = 99;
  EXPECT_THROW(schema_from_json(bad), DataError);
}

class GermanCreditTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new Dataset(load_csv(testing::german_credit_path(), "default")); }
  static void TearDownTestSuite() { delete data_; }
  static Dataset* data_;
};
Dataset* GermanCreditTest::data_ = nullptr;

TEST_F(GermanCreditTest, HasTwentyFeaturesThirteenCategorical) {
  EXPECT_EQ(data_->n_rows(), 1000u);
  EXPECT_EQ(data_->n_features(), 20u);
  EXPECT_EQ(data_->schema.categorical_count(), 13u);
  EXPECT_EQ(data_->class_names, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(std::count(data_->labels.begin(), data_->labels.end(), 1), 300);
}

TEST_F(GermanCreditTest, OneHotWidthIsSixtyOne) {
  EXPECT_EQ(data_->schema.onehot_width(), 61u);
  EXPECT_EQ(to_onehot(data_->rows[0], data_->schema).size(), 61u);
}

TEST_F(GermanCreditTest, CreditAmountBinsHold120PlusMinusOne) {
  auto split = split_dataset(*data_, 0.6, 42);
  ASSERT_EQ(split.train.n_rows(), 600u);
  discretize(split.train, 5);
  const std::size_t col = split.train.schema.index_of("credit_amount");
  std::map<int, int> counts;
  for (const auto& row : split.train.rows) {
    ++counts[bin_of(split.train.schema[col], row[col])];
  }
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [bin, c] : counts) {
    EXPECT_NEAR(c, 120, 1) << "bin " << bin;
  }
}

}  // namespace
}  // namespace permuteattack
