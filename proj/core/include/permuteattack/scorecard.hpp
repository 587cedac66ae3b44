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

// Probability-of-default to credit-score transform:
//
//   odds  = (1 - pd) / pd
//   score = base_score + pdo / ln(2) * ln(odds / base_odds)

#ifndef PERMUTEATTACK_SCORECARD_HPP_
#define PERMUTEATTACK_SCORECARD_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "permuteattack/model.hpp"

namespace permuteattack {

enum class Rounding { kFloor, kNearest };

struct ScorecardConfig {
  double base_score = 600.0;
  double pdo = 15.0;
  double base_odds = 20.0;
  Rounding rounding = Rounding::kFloor;
  // Index of the "default" class in the model's probability vector.
  std::size_t default_class = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ScorecardConfig from_json(const nlohmann::json& doc);
};

// Unrounded score. Throws DomainError unless 0 < pd < 1.
double raw_score(double pd, const ScorecardConfig& cfg);
long pd_to_score(double pd, const ScorecardConfig& cfg);
// Inverse of raw_score.
double score_to_pd(double score, const ScorecardConfig& cfg);

struct ScoreRow {
  std::string label;
  double pd = 0.0;
  // Empty when pd is exactly 0 or 1: the odds, and so the score, are unbounded.
  std::optional<long> score;
  std::vector<std::string> changes;
};

struct ScoreReport {
  std::vector<ScoreRow> rows;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

struct CounterfactualEntry {
  ProbabilityVector probs;
  // Pre-rendered change descriptions, e.g. "housing: own -> for free".
  std::vector<std::string> changes;
};

// Original row first, then CF1..CFn. Throws DataError for an empty list.
ScoreReport score_report(const ProbabilityVector& original,
                         std::span<const CounterfactualEntry> counterfactuals,
                         const ScorecardConfig& cfg);

}  // namespace permuteattack

#endif  // PERMUTEATTACK_SCORECARD_HPP_
