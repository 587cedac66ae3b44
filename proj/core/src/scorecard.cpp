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

#include "permuteattack/scorecard.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "permuteattack/error.hpp"

namespace permuteattack {
namespace {

constexpr const char* kNoChange = "—";

std::string join(const std::vector<std::string>& parts) {
  if (parts.empty()) return kNoChange;
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

}  // namespace

void ScorecardConfig::validate() const {
  if (!(pdo > 0)) throw ConfigError("pdo must be positive");
  if (!(base_odds > 0)) throw ConfigError("base_odds must be positive");
}

nlohmann::json ScorecardConfig::to_json() const {
  return {{"base_score", base_score},
          {"pdo", pdo},
          {"base_odds", base_odds},
          {"rounding", rounding == Rounding::kFloor ? "floor" : "nearest"},
          {"default_class", default_class}};
}

ScorecardConfig ScorecardConfig::from_json(const nlohmann::json& doc) {
  ScorecardConfig c;
  try {
    c.base_score = doc.value("base_score", c.base_score);
    c.pdo = doc.value("pdo", c.pdo);
    c.base_odds = doc.value("base_odds", c.base_odds);
    c.default_class = doc.value("default_class", c.default_class);
    const auto r = doc.value("rounding", std::string("floor"));
    if (r == "floor") {
      c.rounding = Rounding::kFloor;
    } else if (r == "nearest") {
      c.rounding = Rounding::kNearest;
    } else {
      throw ConfigError("rounding must be floor or nearest");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scorecard configuration: ") + e.what());
  }
  c.validate();
  return c;
}

double raw_score(double pd, const ScorecardConfig& cfg) {
  if (!(pd > 0.0 && pd < 1.0)) {
    throw DomainError("probability of default must lie in (0, 1), got " +
                      format_number(pd));
  }
  const double odds = (1.0 - pd) / pd;
  return cfg.base_score + cfg.pdo / std::log(2.0) * std::log(odds / cfg.base_odds);
}

long pd_to_score(double pd, const ScorecardConfig& cfg) {
  const double s = raw_score(pd, cfg);
  return static_cast<long>(cfg.rounding == Rounding::kFloor ? std::floor(s)
                                                            : std::round(s));
}

double score_to_pd(double score, const ScorecardConfig& cfg) {
  const double odds =
      cfg.base_odds * std::exp((score - cfg.base_score) * std::log(2.0) / cfg.pdo);
  return 1.0 / (1.0 + odds);
}

ScoreReport score_report(const ProbabilityVector& original,
                         std::span<const CounterfactualEntry> counterfactuals,
                         const ScorecardConfig& cfg) {
  cfg.validate();
  if (counterfactuals.empty()) throw DataError("score report needs at least one counterfactual");
  auto pd_of = [&](const ProbabilityVector& probs) {
    if (cfg.default_class >= probs.size()) {
      throw ConfigError("default_class out of range for the probability vector");
    }
    return probs[cfg.default_class];
  };
  auto score_of = [&](double pd) -> std::optional<long> {
    if (pd <= 0.0 || pd >= 1.0) return std::nullopt;
    return pd_to_score(pd, cfg);
  };
  ScoreReport report;
  const double pd0 = pd_of(original);
  report.rows.push_back({"Original", pd0, score_of(pd0), {}});
  for (std::size_t i = 0; i < counterfactuals.size(); ++i) {
    const double pd = pd_of(counterfactuals[i].probs);
    report.rows.push_back({"CF" + std::to_string(i + 1), pd, score_of(pd),
                           counterfactuals[i].changes});
  }
  return report;
}

std::string ScoreReport::to_text() const {
  std::size_t label_w = 5;
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(label_w)) << "Label" << "  "
     << std::right << std::setw(8) << "PD" << "  " << std::setw(6) << "Score"
     << "  Changes\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(label_w)) << r.label << "  "
       << std::right << std::setw(8) << std::fixed << std::setprecision(4) << r.pd
       << "  " << std::setw(6) << (r.score ? std::to_string(*r.score) : kNoChange) << "  "
       << join(r.changes) << "\n";
  }
  return os.str();
}

nlohmann::json ScoreReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"label", r.label},
                   {"pd", r.pd},
                   {"score", r.score ? nlohmann::json(*r.score) : nlohmann::json(nullptr)},
                   {"changes", r.changes}});
  }
  return out;
}

}  // namespace permuteattack
