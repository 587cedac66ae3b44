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


#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>
#include <thread>

#include "permuteattack/error.hpp"

namespace permuteattack::cli {

namespace {

void reject_unknown(const nlohmann::json& obj, std::string_view where,
                    std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (base / p).lexically_normal().string();
}

}  // namespace

std::filesystem::path RunConfig::model_path() const {
  if (!model.path.empty()) return model.path;
  return std::filesystem::path(out) / "model.json";
}

std::filesystem::path RunConfig::schema_path() const {
  return std::filesystem::path(out) / "schema.json";
}

std::size_t RunConfig::worker_count() const {
  if (workers > 0) return workers;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void RunConfig::validate() const {
  if (data.empty()) throw ConfigError("config: 'data' is required");
  if (target.empty()) throw ConfigError("config: 'target' is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("config: split.train_fraction must lie in (0, 1)");
  }
  if (model.backend == "forest") {
    model.forest.validate();
  } else if (model.backend == "external") {
    if (model.external.command.empty()) {
      throw ConfigError("config: model.command is required for the external backend");
    }
    if (model.external.timeout.count() <= 0) {
      throw ConfigError("config: model.timeout_ms must be positive");
    }
  } else {
    throw ConfigError("config: model.backend must be 'forest' or 'external'");
  }
  attack.validate();
  scorecard.validate();
  if (out.empty()) throw ConfigError("config: 'out' must not be empty");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json m;
  m["backend"] = model.backend;
  if (model.backend == "forest") {
    m["path"] = model_path().string();
    m["n_trees"] = model.forest.n_trees;
    m["max_depth"] = model.forest.max_depth;
    m["min_leaf"] = model.forest.min_leaf;
    m["seed"] = model.forest.seed;
  } else {
    m["command"] = model.external.command;
    m["timeout_ms"] = model.external.timeout.count();
    m["sum_tolerance"] = model.external.sum_tolerance;
  }
  return {
      {"data", data},
      {"target", target},
      {"split", {{"train_fraction", train_fraction}, {"seed", split_seed}}},
      {"model", m},
      {"attack", attack.to_json()},
      {"scorecard", scorecard.to_json()},
      {"workers", workers},
      {"out", out},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    reject_unknown(doc, "config",
                   {"data", "target", "split", "model", "attack", "scorecard",
                    "workers", "out"});
    c.data = resolve(doc.value("data", c.data), base_dir);
    c.target = doc.value("target", c.target);
    if (doc.contains("split")) {
      const auto& s = doc["split"];
      reject_unknown(s, "split", {"train_fraction", "seed"});
      c.train_fraction = s.value("train_fraction", c.train_fraction);
      c.split_seed = s.value("seed", c.split_seed);
    }
    if (doc.contains("model")) {
      const auto& m = doc["model"];
      reject_unknown(m, "model",
                     {"backend", "path", "n_trees", "max_depth", "min_leaf", "seed",
                      "command", "timeout_ms", "sum_tolerance"});
      c.model.backend = m.value("backend", c.model.backend);
      c.model.path = resolve(m.value("path", c.model.path), base_dir);
      c.model.forest.n_trees = m.value("n_trees", c.model.forest.n_trees);
      c.model.forest.max_depth = m.value("max_depth", c.model.forest.max_depth);
      c.model.forest.min_leaf = m.value("min_leaf", c.model.forest.min_leaf);
      c.model.forest.seed = m.value("seed", c.model.forest.seed);
      c.model.external.command = m.value("command", c.model.external.command);
      c.model.external.timeout = std::chrono::milliseconds(
          m.value("timeout_ms", static_cast<long>(c.model.external.timeout.count())));
      c.model.external.sum_tolerance =
          m.value("sum_tolerance", c.model.external.sum_tolerance);
    }
    if (doc.contains("attack")) c.attack = AttackConfig::from_json(doc["attack"]);
    if (doc.contains("scorecard")) {
      c.scorecard = ScorecardConfig::from_json(doc["scorecard"]);
    }
    c.workers = doc.value("workers", c.workers);
    c.out = resolve(doc.value("out", c.out), base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc, path.parent_path());
}

}  // namespace permuteattack::cli
