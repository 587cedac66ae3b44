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

#include "permuteattack/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "permuteattack/error.hpp"

namespace permuteattack {
namespace {

constexpr double kProgressTolerance = 1e-9;
constexpr std::uint64_t kInitStream = 0;

Dataset discretized(Dataset train, int n_bins) {
  discretize(train, n_bins);
  return train;
}

// Elite order: higher fitness, then sparser, then closer, then earlier.
bool fitter(const Candidate& a, std::size_t ia, const Candidate& b,
            std::size_t ib) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  if (a.l0 != b.l0) return a.l0 < b.l0;
  if (a.l2 != b.l2) return a.l2 < b.l2;
  return ia < ib;
}

std::vector<ChangedFeature> diff(const Instance& from, const Instance& to) {
  std::vector<ChangedFeature> out;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] != to[i]) out.push_back({i, from[i], to[i]});
  }
  return out;
}

nlohmann::json optional_limit(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double limit_from(const nlohmann::json& doc, const char* key, double fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  return doc[key].get<double>();
}

nlohmann::json instance_to_json(const Instance& x, const Schema& schema) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].kind == FeatureKind::kCategorical) {
      out[schema[i].name] = format_value(schema[i], x[i]);
    } else {
      out[schema[i].name] = x[i];
    }
  }
  return out;
}

nlohmann::json raw_json(const FeatureSchema& f, double v) {
  if (f.kind == FeatureKind::kCategorical) return format_value(f, v);
  return v;
}

double value_from_json(const FeatureSchema& f, const nlohmann::json& v) {
  if (v.is_string()) return parse_value(f, v.get<std::string>());
  return v.get<double>();
}

}  // namespace

void AttackConfig::validate() const {
  if (rho0 < 0 || rho1 < 0) throw ConfigError("penalties must be non-negative");
  if (!(decay > 0 && decay < 1)) throw ConfigError("decay must lie in (0, 1)");
  if (population_size < 2) throw ConfigError("population_size must be at least 2");
  if (mating_pool_size < 2 || mating_pool_size > population_size) {
    throw ConfigError("mating_pool_size must lie in [2, population_size]");
  }
  if (generations < 1) throw ConfigError("generations must be positive");
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  if (gibbs_iters < 1) throw ConfigError("gibbs_iters must be positive");
  if (n_bins < 2) throw ConfigError("n_bins must be at least 2");
  if (!(mutation_probability >= 0 && mutation_probability <= 1)) {
    throw ConfigError("mutation_probability must lie in [0, 1]");
  }
  if (target_class && *target_class < 0) {
    throw ConfigError("target_class must be non-negative");
  }
}

nlohmann::json AttackConfig::to_json() const {
  return {{"rho0", rho0},
          {"rho1", rho1},
          {"decay", decay},
          {"population_size", population_size},
          {"mating_pool_size", mating_pool_size},
          {"generations", generations},
          {"temperature", temperature},
          {"target_class", target_class ? nlohmann::json(*target_class)
                                        : nlohmann::json(nullptr)},
          {"delta0_max", optional_limit(delta0_max)},
          {"delta2_max", optional_limit(delta2_max)},
          {"mutable_features", mutable_features},
          {"gibbs", gibbs},
          {"gibbs_iters", gibbs_iters},
          {"n_bins", n_bins},
          {"mutation_probability", mutation_probability},
          {"mutation_range", mutation_range},
          {"seed", seed}};
}

AttackConfig AttackConfig::from_json(const nlohmann::json& doc) {
  AttackConfig c;
  try {
    c.rho0 = doc.value("rho0", c.rho0);
    c.rho1 = doc.value("rho1", c.rho1);
    c.decay = doc.value("decay", c.decay);
    c.population_size = doc.value("population_size", c.population_size);
    c.mating_pool_size = doc.value("mating_pool_size", c.mating_pool_size);
    c.generations = doc.value("generations", c.generations);
    c.temperature = doc.value("temperature", c.temperature);
    if (doc.contains("target_class") && !doc["target_class"].is_null()) {
      c.target_class = doc["target_class"].get<int>();
    }
    c.delta0_max = limit_from(doc, "delta0_max", c.delta0_max);
    c.delta2_max = limit_from(doc, "delta2_max", c.delta2_max);
    c.mutable_features = doc.value("mutable_features", c.mutable_features);
    if (doc.contains("gibbs")) {
      const auto& g = doc["gibbs"];
      if (g.is_string()) {
        const auto s = g.get<std::string>();
        if (s != "on" && s != "off") throw ConfigError("gibbs must be on or off");
        c.gibbs = s == "on";
      } else {
        c.gibbs = g.get<bool>();
      }
    }
    c.gibbs_iters = doc.value("gibbs_iters", c.gibbs_iters);
    c.n_bins = doc.value("n_bins", c.n_bins);
    c.mutation_probability = doc.value("mutation_probability", c.mutation_probability);
    c.mutation_range = doc.value("mutation_range", c.mutation_range);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid attack configuration: ") + e.what());
  }
  c.validate();
  return c;
}

DistanceScales::DistanceScales(const Dataset& train) {
  for (std::size_t i = 0; i < train.n_features(); ++i) {
    const bool categorical = train.schema[i].kind == FeatureKind::kCategorical;
    categorical_.push_back(categorical);
    if (categorical) {
      scale_.push_back(1.0);
      continue;
    }
    const auto col = train.column(i);
    const double mean =
        std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(col.size()));
    scale_.push_back(sd > 1e-12 ? sd : 1.0);
  }
}

std::size_t DistanceScales::l0(const Instance& a, const Instance& b) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

double DistanceScales::l2(const Instance& a, const Instance& b) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    if (categorical_[i]) {
      sum += 1.0;
    } else {
      const double d = (a[i] - b[i]) / scale_[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

AttackEnvironment::AttackEnvironment(Dataset train, int n_bins)
    : n_bins_(n_bins),
      train_(discretized(std::move(train), n_bins)),
      domain_(train_),
      index_(train_),
      scales_(train_) {}

std::vector<bool> AttackEnvironment::mutable_mask(const AttackConfig& config) const {
  std::vector<bool> mask;
  for (const auto& f : schema().features) mask.push_back(f.is_mutable);
  if (!config.mutable_features.empty()) {
    std::vector<bool> allowed(mask.size(), false);
    for (const auto& name : config.mutable_features) {
      const auto i = schema().find(name);
      if (!i) throw ConfigError("unknown feature '" + name + "' in mutable_features");
      allowed[*i] = true;
    }
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && allowed[i];
  }
  return mask;
}

double fitness_value(double target_prob, double original_target_prob,
                     std::size_t l0, double l2, double rho0, double rho1) {
  return (target_prob - original_target_prob) -
         rho0 * static_cast<double>(l0) - rho1 * l2;
}

double compute_fitness(const Instance& x, const Instance& x_orig, int target,
                       double rho0, double rho1, Classifier& model,
                       const DistanceScales& scales) {
  const Instance pair[] = {x, x_orig};
  const auto probs = model.predict_proba(pair);
  const auto t = static_cast<std::size_t>(target);
  return fitness_value(probs[0][t], probs[1][t], scales.l0(x_orig, x),
                       scales.l2(x_orig, x), rho0, rho1);
}

std::vector<double> softmax(std::span<const double> values, double temperature) {
  if (values.empty()) return {};
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp((values[i] - top) / temperature);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> select_parents(
    std::span<const double> fitness, double temperature, std::size_t pairs,
    Rng& rng) {
  if (fitness.empty()) throw ConfigError("cannot select from an empty population");
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  const auto probs = softmax(fitness, temperature);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t a = rng.weighted(probs);
    const std::size_t b = rng.weighted(probs);
    out.emplace_back(a, b);
  }
  return out;
}

Instance crossover(const Instance& parent1, const Instance& parent2,
                   const ConditionalIndex* index, Rng& rng) {
  if (parent1.size() != parent2.size()) {
    throw DataError("crossover parents have different lengths");
  }
  Instance child = parent1;
  for (std::size_t i = 0; i < child.size(); ++i) {
    if (!rng.bernoulli(0.5)) continue;
    if (index != nullptr && parent2[i] != parent1[i]) {
      child[i] = nearest_conditional_value(*index, child, i, parent2[i], rng);
    } else {
      child[i] = parent2[i];
    }
  }
  return child;
}

std::vector<std::size_t> choose_mutation_features(
    std::span<const double> importance, const std::vector<bool>& mutable_mask,
    double probability, Rng& rng) {
  std::vector<std::size_t> candidates;
  std::vector<double> scores;
  for (std::size_t i = 0; i < mutable_mask.size(); ++i) {
    if (!mutable_mask[i]) continue;
    candidates.push_back(i);
    scores.push_back(importance[i]);
  }
  if (candidates.empty()) throw ConfigError("no mutable features");

  std::size_t count = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) count += rng.bernoulli(probability);
  count = std::max<std::size_t>(count, 1);

  auto weights = softmax(scores);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = rng.weighted(weights);
    chosen.push_back(candidates[pick]);
    weights[pick] = 0.0;
  }
  return chosen;
}

Instance mutate(const Instance& child, std::span<const double> importance,
                const AttackConfig& config, const PermutationDomain& domain,
                const ConditionalIndex& index, Rng& rng) {
  const auto features = choose_mutation_features(importance, domain.mask(),
                                                 config.mutation_probability, rng);
  if (config.gibbs) {
    return gibbs_perturb(index, domain, child, features, config.gibbs_iters, rng);
  }
  Instance out = child;
  for (std::size_t f : features) out = permute_feature(out, f, domain, rng);
  return out;
}

std::pair<double, double> update_parameters(double rho0, double rho1,
                                            bool progress, double decay) {
  if (progress) return {rho0, rho1};
  return {rho0 * decay, rho1 * decay};
}

AttackResult attack(const Instance& x_orig, int target_class, Classifier& model,
                    const AttackEnvironment& env, const AttackConfig& config) {
  config.validate();
  const Schema& schema = env.schema();
  validate_instance(schema, x_orig);
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= model.n_classes()) {
    throw ConfigError("target class " + std::to_string(target_class) +
                      " out of range");
  }
  const auto domain = env.domain().with_mask(env.mutable_mask(config));
  const auto movable = domain.mutable_features();
  if (movable.empty()) throw ConfigError("no mutable features");

  const auto t = static_cast<std::size_t>(target_class);
  const auto d = static_cast<std::size_t>(config.population_size);
  const auto pool_size = static_cast<std::size_t>(config.mating_pool_size);
  const ConditionalIndex* cond = config.gibbs ? &env.index() : nullptr;
  const auto& scales = env.scales();

  AttackResult result;
  result.seed = config.seed;
  result.target_class = target_class;
  result.original_probs = model.predict_one(x_orig);
  result.original_class = static_cast<int>(argmax(result.original_probs));
  if (result.original_class == target_class) {
    result.success = true;
    result.counterfactual = x_orig;
    result.final_probs = result.original_probs;
    return result;
  }
  const double p_orig = result.original_probs[t];

  std::vector<Instance> population;
  population.reserve(d);
  for (std::size_t slot = 0; slot < d; ++slot) {
    Rng rng(derive_seed(config.seed, kInitStream, slot));
    const std::size_t f = movable[rng.index(movable.size())];
    if (cond != nullptr) {
      const std::size_t one[] = {f};
      population.push_back(
          gibbs_perturb(*cond, domain, x_orig, one, config.gibbs_iters, rng));
    } else {
      population.push_back(permute_feature(x_orig, f, domain, rng));
    }
  }

  double rho0 = config.rho0;
  double rho1 = config.rho1;
  double best_prob = p_orig;
  const std::size_t m = schema.size();
  std::vector<double> importance(m, 0.0);
  Candidate elite;

  for (int g = 0; g < config.generations; ++g) {
    const auto probs = model.predict_proba(population);
    if (probs.size() != population.size()) {
      throw BackendError("model returned a wrong number of predictions");
    }
    std::vector<Candidate> members(d);
    for (std::size_t i = 0; i < d; ++i) {
      auto& c = members[i];
      c.instance = std::move(population[i]);
      c.probs = probs[i];
      c.changed_mask.resize(m);
      for (std::size_t j = 0; j < m; ++j) c.changed_mask[j] = c.instance[j] != x_orig[j];
      c.l0 = scales.l0(x_orig, c.instance);
      c.l2 = scales.l2(x_orig, c.instance);
      c.fitness = fitness_value(c.probs[t], p_orig, c.l0, c.l2, rho0, rho1);
    }

    std::vector<std::size_t> ranked(d);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      return fitter(members[a], a, members[b], b);
    });
    elite = members[ranked.front()];

    GenerationTrace tr;
    tr.generation = g;
    tr.best_fitness = elite.fitness;
    tr.best_l0 = elite.l0;
    tr.rho0 = rho0;
    tr.rho1 = rho1;
    if (g > 0) tr.carried_elite_fitness = members[0].fitness;
    double gen_best_prob = 0.0;
    for (const auto& c : members) gen_best_prob = std::max(gen_best_prob, c.probs[t]);
    tr.best_target_prob = gen_best_prob;
    result.trace.push_back(tr);

    if (argmax(elite.probs) == t) {
      result.success = true;
      result.generations_used = g + 1;
      result.counterfactual = elite.instance;
      result.changed_features = diff(x_orig, elite.instance);
      result.final_probs = elite.probs;
      result.l2 = elite.l2;
      result.within_budget = static_cast<double>(elite.l0) <= config.delta0_max &&
                             elite.l2 <= config.delta2_max;
      return result;
    }

    std::vector<double> sums(m, 0.0), counts(m, 0.0);
    for (const auto& c : members) {
      const double effect = std::abs(c.probs[t] - p_orig);
      for (std::size_t j = 0; j < m; ++j) {
        if (!c.changed_mask[j]) continue;
        sums[j] += effect;
        counts[j] += 1.0;
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      importance[j] = counts[j] > 0 ? sums[j] / counts[j] : 0.0;
    }

    const bool progress = gen_best_prob > best_prob + kProgressTolerance;
    best_prob = std::max(best_prob, gen_best_prob);

    const std::size_t k = std::min(pool_size, d);
    std::vector<double> pool_fitness(k);
    for (std::size_t i = 0; i < k; ++i) pool_fitness[i] = members[ranked[i]].fitness;

    population.clear();
    population.push_back(elite.instance);
    for (std::size_t slot = 1; slot < d; ++slot) {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(g) + 1, slot));
      const auto [a, b] = select_parents(pool_fitness, config.temperature, 1, rng).front();
      Instance child = crossover(members[ranked[a]].instance,
                                 members[ranked[b]].instance, cond, rng);
      population.push_back(mutate(child, importance, config, domain, env.index(), rng));
    }
    std::tie(rho0, rho1) = update_parameters(rho0, rho1, progress, config.decay);
  }

  result.success = false;
  result.generations_used = config.generations;
  result.final_probs = elite.probs;
  return result;
}

AttackResult attack(const Instance& x_orig, int target_class, Classifier& model,
                    const Dataset& train, const AttackConfig& config) {
  const AttackEnvironment env(train, config.n_bins);
  return attack(x_orig, target_class, model, env, config);
}

nlohmann::json attack_result_to_json(const AttackResult& result,
                                     const Schema& schema,
                                     const AttackConfig& config) {
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : result.changed_features) {
    const auto& f = schema[c.index];
    changes.push_back({{"feature", f.name},
                       {"old", raw_json(f, c.old_value)},
                       {"new", raw_json(f, c.new_value)}});
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& g : result.trace) {
    trace.push_back({{"generation", g.generation},
                     {"best_fitness", g.best_fitness},
                     {"best_target_prob", g.best_target_prob},
                     {"carried_elite_fitness",
                      std::isnan(g.carried_elite_fitness)
                          ? nlohmann::json(nullptr)
                          : nlohmann::json(g.carried_elite_fitness)},
                     {"best_l0", g.best_l0},
                     {"rho0", g.rho0},
                     {"rho1", g.rho1}});
  }
  nlohmann::json doc = {
      {"format", "permuteattack.attack_result"},
      {"version", 1},
      {"success", result.success},
      {"original_class", result.original_class},
      {"target_class", result.target_class},
      {"generations_used", result.generations_used},
      {"original_probs", result.original_probs},
      {"final_probs", result.final_probs},
      {"counterfactual", result.counterfactual
                             ? instance_to_json(*result.counterfactual, schema)
                             : nlohmann::json(nullptr)},
      {"changed_features", std::move(changes)},
      {"l0", result.changed_features.size()},
      {"l2", result.l2},
      {"within_budget", result.within_budget},
      {"trace", std::move(trace)},
      {"seed", result.seed},
      {"config", config.to_json()},
  };
  if (!result.error.empty()) doc["error"] = result.error;
  return doc;
}

AttackResult attack_result_from_json(const nlohmann::json& doc,
                                     const Schema& schema) {
  try {
    AttackResult r;
    r.success = doc.at("success").get<bool>();
    r.original_class = doc.at("original_class").get<int>();
    r.target_class = doc.at("target_class").get<int>();
    r.generations_used = doc.at("generations_used").get<int>();
    r.original_probs = doc.at("original_probs").get<std::vector<double>>();
    r.final_probs = doc.at("final_probs").get<std::vector<double>>();
    r.l2 = doc.value("l2", 0.0);
    r.within_budget = doc.value("within_budget", true);
    r.seed = doc.value("seed", std::uint64_t{0});
    r.error = doc.value("error", std::string());
    const auto& cf = doc.at("counterfactual");
    if (!cf.is_null()) {
      Instance x;
      for (const auto& f : schema.features) {
        x.values.push_back(value_from_json(f, cf.at(f.name)));
      }
      r.counterfactual = std::move(x);
    }
    for (const auto& c : doc.at("changed_features")) {
      const std::size_t i = schema.index_of(c.at("feature").get<std::string>());
      r.changed_features.push_back({i, value_from_json(schema[i], c.at("old")),
                                    value_from_json(schema[i], c.at("new"))});
    }
    for (const auto& g : doc.value("trace", nlohmann::json::array())) {
      GenerationTrace t;
      t.generation = g.at("generation").get<int>();
      t.best_fitness = g.at("best_fitness").get<double>();
      t.best_target_prob = g.at("best_target_prob").get<double>();
      if (!g.at("carried_elite_fitness").is_null()) {
        t.carried_elite_fitness = g["carried_elite_fitness"].get<double>();
      }
      t.best_l0 = g.at("best_l0").get<std::size_t>();
      t.rho0 = g.at("rho0").get<double>();
      t.rho1 = g.at("rho1").get<double>();
      r.trace.push_back(t);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed attack result: ") + e.what());
  }
}

}  // namespace permuteattack
