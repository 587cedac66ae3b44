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


// Run configuration shared by every CLI command: where the data lives, how
// it is split, which model to use and how to attack it.

#ifndef PERMUTEATTACK_TOOLS_CLI_RUN_CONFIG_HPP_
#define PERMUTEATTACK_TOOLS_CLI_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "permuteattack/attack.hpp"
#include "permuteattack/external_model.hpp"
#include "permuteattack/forest.hpp"
#include "permuteattack/scorecard.hpp"

namespace permuteattack::cli {

struct ModelConfig {
  // "forest" or "external".
  std::string backend = "forest";
  // Forest model file; empty means <out>/model.json.
  std::string path;
  ForestParams forest;
  ExternalModelConfig external;
};

struct RunConfig {
  std::string data;
  std::string target = "default";
  double train_fraction = 0.6;
  std::uint64_t split_seed = 42;
  ModelConfig model;
  AttackConfig attack;
  ScorecardConfig scorecard;
  // 0 means one worker per available core.
  std::size_t workers = 0;
  std::string out = "out";

  std::filesystem::path model_path() const;
  std::filesystem::path schema_path() const;
  std::size_t worker_count() const;

  void validate() const;
  nlohmann::json to_json() const;
  // Relative paths in the document are resolved against `base_dir`.
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace permuteattack::cli

#endif  // PERMUTEATTACK_TOOLS_CLI_RUN_CONFIG_HPP_
