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

#include "permuteattack/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "permuteattack/error.hpp"

namespace permuteattack {
namespace {

nlohmann::json direction_json(const FeatureDirection& d) {
  return {{"increases", d.increases},
          {"decreases", d.decreases},
          {"total_increase", d.total_increase},
          {"total_decrease", d.total_decrease},
          {"transitions", d.transitions}};
}

void record(FeatureDirection& d, const FeatureSchema& f, const ChangedFeature& c) {
  if (f.kind == FeatureKind::kCategorical) {
    ++d.transitions[format_value(f, c.old_value) + " -> " +
                    format_value(f, c.new_value)];
  } else if (c.new_value > c.old_value) {
    ++d.increases;
    d.total_increase += c.new_value - c.old_value;
  } else {
    ++d.decreases;
    d.total_decrease += c.old_value - c.new_value;
  }
}

std::vector<Instance> counterfactuals_of(const std::vector<AttackResult>& results) {
  std::vector<Instance> out;
  for (const auto& r : results) {
    if (r.success && r.counterfactual && !r.changed_features.empty()) {
      out.push_back(*r.counterfactual);
    }
  }
  return out;
}

}  // namespace

nlohmann::json BatchSummary::to_json() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : histogram) hist[std::to_string(k)] = v;
  nlohmann::json dirs = nlohmann::json::object();
  for (const auto& [name, d] : per_feature_direction) dirs[name] = direction_json(d);
  nlohmann::json flips = nlohmann::json::object();
  for (const auto& [flip, per] : direction_by_flip) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, d] : per) j[name] = direction_json(d);
    flips[flip] = std::move(j);
  }
  return {{"n_attacked", n_attacked},
          {"n_success", n_success},
          {"n_errors", n_errors},
          {"success_rate", success_rate},
          {"mean_changed_features", mean_changed_features},
          {"histogram", std::move(hist)},
          {"per_feature_change_count", per_feature_change_count},
          {"per_feature_direction", std::move(dirs)},
          {"direction_by_flip", std::move(flips)}};
}

std::string BatchSummary::histogram_csv() const {
  std::ostringstream os;
  os << "bin,count\n";
  for (const auto& [k, v] : histogram) os << k << "," << v << "\n";
  return os.str();
}

BatchSummary summarize(std::span<const AttackResult> results, const Schema& schema) {
  BatchSummary s;
  s.n_attacked = results.size();
  std::size_t total_changed = 0;
  for (const auto& r : results) {
    if (!r.error.empty()) ++s.n_errors;
    if (!r.success) continue;
    ++s.n_success;
    const std::size_t l0 = r.changed_features.size();
    total_changed += l0;
    ++s.histogram[l0];
    const std::string flip =
        std::to_string(r.original_class) + "->" + std::to_string(r.target_class);
    for (const auto& c : r.changed_features) {
      const auto& f = schema[c.index];
      ++s.per_feature_change_count[f.name];
      record(s.per_feature_direction[f.name], f, c);
      record(s.direction_by_flip[flip][f.name], f, c);
    }
  }
  if (s.n_attacked > 0) {
    s.success_rate =
        static_cast<double>(s.n_success) / static_cast<double>(s.n_attacked);
  }
  if (s.n_success > 0) {
    s.mean_changed_features =
        static_cast<double>(total_changed) / static_cast<double>(s.n_success);
  }
  return s;
}

std::vector<std::string> most_changed_features(const BatchSummary& summary,
                                               std::size_t k) {
  std::vector<std::pair<std::string, std::size_t>> counts(
      summary.per_feature_change_count.begin(),
      summary.per_feature_change_count.end());
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, counts.size()); ++i) {
    out.push_back(counts[i].first);
  }
  return out;
}

BatchOutput run_batch(std::span<const Instance> instances, Classifier& model,
                      const AttackEnvironment& env, const AttackConfig& config,
                      std::size_t workers) {
  config.validate();
  if (instances.empty()) throw DataError("batch has no instances");
  if (!config.target_class && model.n_classes() != 2) {
    throw ConfigError("target_class is required for models with more than 2 classes");
  }

  BatchOutput out;
  out.results.resize(instances.size());
  std::vector<ProbabilityVector> predicted;
  try {
    predicted = model.predict_proba(instances);
  } catch (const Error& e) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      out.results[i].error = e.what();
      out.results[i].seed = config.seed + i;
    }
    out.summary = summarize(out.results, env.schema());
    return out;
  }

  auto run_one = [&](std::size_t i) {
    AttackConfig cfg = config;
    cfg.seed = config.seed + i;
    const int target = config.target_class
                           ? *config.target_class
                           : 1 - static_cast<int>(argmax(predicted[i]));
    try {
      out.results[i] = attack(instances[i], target, model, env, cfg);
    } catch (const Error& e) {
      AttackResult failed;
      failed.seed = cfg.seed;
      failed.target_class = target;
      failed.original_probs = predicted[i];
      failed.original_class = static_cast<int>(argmax(predicted[i]));
      failed.error = e.what();
      out.results[i] = std::move(failed);
    }
  };

  const std::size_t n_threads =
      model.concurrent_safe() ? std::min(std::max<std::size_t>(workers, 1),
                                         instances.size())
                              : 1;
  if (n_threads == 1) {
    for (std::size_t i = 0; i < instances.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  out.summary = summarize(out.results, env.schema());
  return out;
}

BatchOutput restricted_attack(std::span<const Instance> instances,
                              const std::vector<std::string>& allowed_features,
                              Classifier& model, const AttackEnvironment& env,
                              const AttackConfig& config, std::size_t workers) {
  if (allowed_features.empty()) throw ConfigError("allowed feature set is empty");
  for (const auto& name : allowed_features) {
    if (!env.schema().find(name)) {
      throw ConfigError("unknown feature '" + name + "' in allowed set");
    }
  }
  AttackConfig cfg = config;
  if (cfg.mutable_features.empty()) {
    cfg.mutable_features = allowed_features;
  } else {
    std::vector<std::string> both;
    for (const auto& name : cfg.mutable_features) {
      if (std::find(allowed_features.begin(), allowed_features.end(), name) !=
          allowed_features.end()) {
        both.push_back(name);
      }
    }
    if (both.empty()) throw ConfigError("allowed features are all immutable");
    cfg.mutable_features = std::move(both);
  }
  return run_batch(instances, model, env, cfg, workers);
}

std::vector<std::string> complement_features(const Schema& schema,
                                             const std::vector<std::string>& excluded) {
  for (const auto& name : excluded) schema.index_of(name);
  std::vector<std::string> out;
  for (const auto& f : schema.features) {
    if (std::find(excluded.begin(), excluded.end(), f.name) == excluded.end()) {
      out.push_back(f.name);
    }
  }
  return out;
}

std::size_t CoOccurrenceGraph::weight(const std::string& a, const std::string& b) const {
  const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  const auto it = edges.find(key);
  return it == edges.end() ? 0 : it->second;
}

std::string CoOccurrenceGraph::to_edge_list() const {
  std::ostringstream os;
  for (const auto& [pair, w] : edges) {
    os << pair.first << '\t' << pair.second << '\t' << w << '\n';
  }
  return os.str();
}

std::string CoOccurrenceGraph::to_dot() const {
  std::size_t max_w = 1;
  for (const auto& [pair, w] : edges) max_w = std::max(max_w, w);
  std::ostringstream os;
  os << "graph cooccurrence {\n";
  for (const auto& [name, count] : nodes) {
    os << "  \"" << name << "\" [label=\"" << name << " (" << count << ")\"];\n";
  }
  for (const auto& [pair, w] : edges) {
    const double width = 1.0 + 7.0 * static_cast<double>(w) / static_cast<double>(max_w);
    os << "  \"" << pair.first << "\" -- \"" << pair.second << "\" [weight=" << w
       << ", penwidth=" << format_number(std::round(width * 100) / 100) << "];\n";
  }
  os << "}\n";
  return os.str();
}

CoOccurrenceGraph cooccurrence(std::span<const AttackResult> results,
                               const Schema& schema) {
  CoOccurrenceGraph g;
  for (const auto& r : results) {
    if (!r.success) continue;
    std::vector<std::string> names;
    for (const auto& c : r.changed_features) names.push_back(schema[c.index].name);
    std::sort(names.begin(), names.end());
    for (const auto& n : names) ++g.nodes[n];
    for (std::size_t a = 0; a < names.size(); ++a) {
      for (std::size_t b = a + 1; b < names.size(); ++b) {
        ++g.edges[{names[a], names[b]}];
      }
    }
  }
  return g;
}

ForestParams discriminator_params(std::uint64_t seed) {
  ForestParams p;
  p.n_trees = 101;
  p.seed = seed;
  return p;
}

RealismResult discriminator_fail_rate(std::span<const Instance> real,
                                      std::span<const Instance> generated_train,
                                      std::span<const Instance> generated_test,
                                      const Schema& schema,
                                      const ForestParams& params) {
  if (real.empty() || generated_train.empty() || generated_test.empty()) {
    throw DataError("realism test needs real rows and two non-empty generated sets");
  }
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& r : real) {
    x.push_back(to_onehot(r, schema));
    y.push_back(1);
  }
  for (const auto& g : generated_train) {
    x.push_back(to_onehot(g, schema));
    y.push_back(0);
  }
  const ForestModel disc = train_forest(x, y, 2, params);
  std::size_t fooled = 0;
  for (const auto& g : generated_test) {
    if (argmax(disc.predict(to_onehot(g, schema))) == 1) ++fooled;
  }
  RealismResult out;
  out.n_real = real.size();
  out.n_train_generated = generated_train.size();
  out.n_test_generated = generated_test.size();
  out.fail_rate =
      static_cast<double>(fooled) / static_cast<double>(generated_test.size());
  return out;
}

RealismResult realism_discriminator(std::span<const Instance> real_test,
                                    const AttackConfig& generator_config,
                                    Classifier& model, const AttackEnvironment& env,
                                    const ForestParams& discriminator_params,
                                    std::uint64_t seed_a, std::uint64_t seed_b,
                                    std::size_t workers) {
  if (seed_a == seed_b) throw ConfigError("realism test needs two distinct seeds");
  AttackConfig cfg = generator_config;
  cfg.seed = seed_a;
  const auto set_a = counterfactuals_of(run_batch(real_test, model, env, cfg, workers).results);
  cfg.seed = seed_b;
  const auto set_b = counterfactuals_of(run_batch(real_test, model, env, cfg, workers).results);
  if (set_a.empty() || set_b.empty()) {
    throw DataError("realism test produced no successful counterfactuals");
  }
  return discriminator_fail_rate(real_test, set_a, set_b, env.schema(),
                                 discriminator_params);
}

}  // namespace permuteattack
