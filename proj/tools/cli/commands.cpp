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


#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "permuteattack/analysis.hpp"
#include "permuteattack/attack.hpp"
#include "permuteattack/error.hpp"
#include "permuteattack/external_model.hpp"
#include "permuteattack/forest.hpp"
#include "permuteattack/rng.hpp"
#include "permuteattack/scorecard.hpp"
#include "permuteattack/tabular.hpp"
#include "run_config.hpp"

namespace permuteattack::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kTool = "permuteattack";

// Flags shared by all commands; unset values leave the config untouched.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> target;
  std::optional<std::string> gibbs;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::vector<std::string> exclude;
  std::vector<std::string> allow_only;
};

json provenance(const RunConfig& cfg) {
  return {{"tool", kTool}, {"version", PERMUTEATTACK_VERSION}, {"config", cfg.to_json()}};
}

std::string comment_header(const RunConfig& cfg, std::string_view marker) {
  std::ostringstream s;
  s << marker << ' ' << kTool << ' ' << PERMUTEATTACK_VERSION << '\n';
  s << marker << " config " << cfg.to_json().dump() << '\n';
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& doc) {
  write_file(path, doc.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

// Feature list flags accept "a,b" as well as "features=a,b".
std::vector<std::string> feature_list(const std::vector<std::string>& raw) {
  std::vector<std::string> names;
  for (std::string item : raw) {
    if (item.rfind("features=", 0) == 0) item.erase(0, 9);
    std::stringstream ss(item);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) names.push_back(name);
    }
  }
  return names;
}

RunConfig load_config(const Overrides& o) {
  RunConfig cfg = RunConfig::load(o.config_path);
  if (o.seed) cfg.attack.seed = *o.seed;
  if (o.target) cfg.attack.target_class = *o.target;
  if (o.gibbs) cfg.attack.gibbs = *o.gibbs == "on";
  if (o.out) cfg.out = *o.out;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

// Data, split, environment and model for the commands that attack.
struct Pipeline {
  Dataset data;
  TrainTestSplit split;
  std::unique_ptr<AttackEnvironment> env;
  std::unique_ptr<Classifier> model;
};

// Model-relevant part of a schema: bin edges depend on n_bins, which may
// legitimately differ between training and attacking.
json schema_signature(const json& doc) {
  json features = doc.at("features");
  for (auto& f : features) {
    f.erase("bin_edges");
    f.erase("min");
    f.erase("max");
  }
  return features;
}

Pipeline load_pipeline(const RunConfig& cfg) {
  Pipeline p;
  p.data = load_csv(cfg.data, cfg.target);
  p.split = split_dataset(p.data, cfg.train_fraction, cfg.split_seed);
  p.env = std::make_unique<AttackEnvironment>(p.split.train, cfg.attack.n_bins);
  const Schema& schema = p.env->schema();
  if (cfg.model.backend == "forest") {
    const fs::path model_path = cfg.model_path();
    if (!fs::exists(model_path)) {
      throw ConfigError("no trained model at " + model_path.string() +
                        "; run 'permuteattack train' first");
    }
    if (fs::exists(cfg.schema_path()) &&
        schema_signature(read_json(cfg.schema_path())) !=
            schema_signature(schema_to_json(schema))) {
      throw ConfigError("model was trained on a different schema than " + cfg.data);
    }
    auto forest = ForestModel::from_json(read_json(model_path));
    p.model = std::make_unique<ForestClassifier>(std::move(forest), schema);
  } else {
    p.model = std::make_unique<ExternalProcessClassifier>(schema, cfg.model.external);
  }
  return p;
}

// Applies --allow-only / --exclude to the attack config.
void apply_masks(const Overrides& o, const Schema& schema, AttackConfig& attack) {
  const auto allow = feature_list(o.allow_only);
  const auto exclude = feature_list(o.exclude);
  for (const auto& n : allow) schema.index_of(n);
  for (const auto& n : exclude) schema.index_of(n);
  std::vector<std::string> names =
      !allow.empty() ? allow
                     : (attack.mutable_features.empty()
                            ? complement_features(schema, {})
                            : attack.mutable_features);
  if (!exclude.empty()) {
    std::erase_if(names, [&](const std::string& n) {
      return std::find(exclude.begin(), exclude.end(), n) != exclude.end();
    });
    if (names.empty()) throw ConfigError("every feature is excluded");
  }
  if (!allow.empty() || !exclude.empty()) attack.mutable_features = names;
}

int resolve_target(const RunConfig& cfg, const ProbabilityVector& probs) {
  if (cfg.attack.target_class) return *cfg.attack.target_class;
  if (probs.size() != 2) {
    throw ConfigError("a target class is required for models with more than 2 classes");
  }
  return 1 - static_cast<int>(argmax(probs));
}

std::string describe_change(const Schema& schema, const ChangedFeature& c) {
  const auto& f = schema[c.index];
  return f.name + ": " + format_value(f, c.old_value) + " -> " +
         format_value(f, c.new_value);
}

std::string format_probs(const ProbabilityVector& p) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s << ", ";
    s << std::fixed << std::setprecision(3) << p[i];
  }
  s << ']';
  return s.str();
}

Instance parse_inline_instance(const std::string& text, const Schema& schema) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("--instance is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("--instance must be a JSON object");
  Instance x;
  x.values.resize(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (!doc.contains(f.name)) throw DataError("--instance is missing feature " + f.name);
    const auto& v = doc[f.name];
    if (v.is_string()) {
      x[i] = parse_value(f, v.get<std::string>());
    } else if (v.is_number() && f.kind != FeatureKind::kCategorical) {
      x[i] = v.get<double>();
    } else {
      throw DataError("--instance has an invalid value for " + f.name);
    }
  }
  for (const auto& [key, value] : doc.items()) {
    if (!schema.find(key)) throw DataError("--instance has unknown feature " + key);
  }
  validate_instance(schema, x);
  return x;
}

// ---------------------------------------------------------------- train

int cmd_train(const Overrides& o, std::ostream& out) {
  RunConfig cfg = load_config(o);
  if (cfg.model.backend != "forest") {
    throw ConfigError("train needs the builtin forest backend");
  }
  const Dataset data = load_csv(cfg.data, cfg.target);
  const auto split = split_dataset(data, cfg.train_fraction, cfg.split_seed);
  const AttackEnvironment env(split.train, cfg.attack.n_bins);
  const ForestModel forest = train_forest(split.train, cfg.model.forest);
  ForestClassifier clf(forest, env.schema());

  json model_doc = forest.to_json();
  model_doc["provenance"] = provenance(cfg);
  json schema_doc = schema_to_json(env.schema());
  schema_doc["target"] = cfg.target;
  schema_doc["class_names"] = data.class_names;
  schema_doc["provenance"] = provenance(cfg);
  write_json(cfg.model_path(), model_doc);
  write_json(cfg.schema_path(), schema_doc);

  out << "train rows " << split.train.n_rows() << ", test rows " << split.test.n_rows()
      << '\n';
  out << "train accuracy " << std::fixed << std::setprecision(4)
      << accuracy(clf, split.train) << '\n';
  out << "test accuracy " << accuracy(clf, split.test) << '\n';
  out << "model written to " << cfg.model_path().string() << '\n';
  out << "schema written to " << cfg.schema_path().string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- attack

int cmd_attack(const Overrides& o, std::optional<std::size_t> row,
               const std::string& inline_instance, int n_counterfactuals,
               std::ostream& out) {
  RunConfig cfg = load_config(o);
  if (n_counterfactuals < 1) throw ConfigError("--n-counterfactuals must be at least 1");
  if (row.has_value() == !inline_instance.empty()) {
    throw ConfigError("attack needs exactly one of --row or --instance");
  }
  Pipeline p = load_pipeline(cfg);
  const Schema& schema = p.env->schema();
  apply_masks(o, schema, cfg.attack);

  Instance x;
  if (row) {
    if (*row >= p.data.n_rows()) {
      throw ConfigError("--row " + std::to_string(*row) + " is out of range (data has " +
                        std::to_string(p.data.n_rows()) + " rows)");
    }
    x = p.data.rows[*row];
  } else {
    x = parse_inline_instance(inline_instance, schema);
  }
  const auto probs = p.model->predict_one(x);
  const int target = resolve_target(cfg, probs);
  if (cfg.scorecard.default_class >= probs.size()) {
    throw ConfigError("scorecard.default_class is not a model class");
  }

  // Repeated runs with derived seeds; keep the first result per distinct
  // changed-feature set.
  std::vector<AttackResult> kept;
  std::set<std::vector<std::size_t>> seen;
  const int max_runs = 10 * n_counterfactuals;
  for (int k = 0; k < max_runs && static_cast<int>(kept.size()) < n_counterfactuals; ++k) {
    AttackConfig run = cfg.attack;
    run.seed = k == 0 ? cfg.attack.seed
                      : derive_seed(cfg.attack.seed, static_cast<std::uint64_t>(k));
    AttackResult r = attack(x, target, *p.model, *p.env, run);
    if (!r.success) continue;
    std::vector<std::size_t> key;
    for (const auto& c : r.changed_features) key.push_back(c.index);
    if (!seen.insert(key).second) continue;
    kept.push_back(std::move(r));
    if (kept.back().changed_features.empty()) break;  // target was the current class
  }

  json results = json::array();
  for (const auto& r : kept) results.push_back(attack_result_to_json(r, schema, cfg.attack));
  json doc = provenance(cfg);
  json raw;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    raw[schema[i].name] = format_value(schema[i], x[i]);
  }
  doc["instance"] = raw;
  doc["original_probs"] = probs;
  doc["target_class"] = target;
  doc["counterfactuals"] = results;

  out << "original class " << argmax(probs) << " " << format_probs(probs)
      << ", target class " << target << '\n';
  if (kept.empty()) {
    out << "no counterfactual found in " << max_runs << " runs\n";
    write_json(fs::path(cfg.out) / "attack.json", doc);
    return kExitNotConverged;
  }

  std::vector<CounterfactualEntry> entries;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = kept[i];
    out << "CF" << i + 1 << " (seed " << r.seed << ", " << r.generations_used
        << " generations): " << r.changed_features.size() << " changed, "
        << format_probs(r.final_probs) << '\n';
    CounterfactualEntry e;
    e.probs = r.final_probs;
    for (const auto& c : r.changed_features) {
      e.changes.push_back(describe_change(schema, c));
      out << "  " << e.changes.back() << '\n';
    }
    entries.push_back(std::move(e));
  }
  const ScoreReport report = score_report(probs, entries, cfg.scorecard);
  out << report.to_text();
  doc["scorecard"] = report.to_json();
  write_json(fs::path(cfg.out) / "attack.json", doc);
  return kExitOk;
}

// ---------------------------------------------------------------- batch / analyze

void write_analysis(const RunConfig& cfg, const std::vector<AttackResult>& results,
                    const Schema& schema, std::size_t top_k, std::ostream& out) {
  const BatchSummary summary = summarize(results, schema);
  const CoOccurrenceGraph graph = cooccurrence(results, schema);
  const auto top = most_changed_features(summary, top_k);
  const fs::path dir(cfg.out);

  json doc = provenance(cfg);
  doc["summary"] = summary.to_json();
  doc["most_changed_features"] = top;
  write_json(dir / "summary.json", doc);
  write_file(dir / "histogram.csv", comment_header(cfg, "#") + summary.histogram_csv());
  write_file(dir / "cooccurrence.tsv", comment_header(cfg, "#") + graph.to_edge_list());
  write_file(dir / "cooccurrence.dot", comment_header(cfg, "//") + graph.to_dot());

  out << "attacked " << summary.n_attacked << ", succeeded " << summary.n_success
      << ", errors " << summary.n_errors << '\n';
  out << "success rate " << std::fixed << std::setprecision(4) << summary.success_rate
      << '\n';
  out << "mean changed features " << summary.mean_changed_features << '\n';
  out << "most changed:";
  for (const auto& name : top) {
    out << ' ' << name << " (" << summary.per_feature_change_count.at(name) << ')';
  }
  out << '\n';
}

int cmd_batch(const Overrides& o, std::ostream& out) {
  RunConfig cfg = load_config(o);
  Pipeline p = load_pipeline(cfg);
  const Schema& schema = p.env->schema();
  apply_masks(o, schema, cfg.attack);
  if (p.split.test.rows.empty()) throw DataError("the test split is empty");

  const BatchOutput batch =
      run_batch(p.split.test.rows, *p.model, *p.env, cfg.attack, cfg.worker_count());
  json results = json::array();
  for (const auto& r : batch.results) {
    results.push_back(attack_result_to_json(r, schema, cfg.attack));
  }
  json doc = provenance(cfg);
  doc["results"] = std::move(results);
  write_json(fs::path(cfg.out) / "results.json", doc);
  write_analysis(cfg, batch.results, schema, 3, out);
  return kExitOk;
}

int cmd_analyze(const Overrides& o, const std::string& results_path, std::size_t top_k,
                std::ostream& out) {
  RunConfig cfg = load_config(o);
  const fs::path path =
      results_path.empty() ? fs::path(cfg.out) / "results.json" : fs::path(results_path);
  const json doc = read_json(path);
  if (!fs::exists(cfg.schema_path())) {
    throw ConfigError("no schema at " + cfg.schema_path().string() +
                      "; run 'permuteattack train' first");
  }
  const Schema schema = schema_from_json(read_json(cfg.schema_path()));
  if (!doc.contains("results") || !doc["results"].is_array()) {
    throw DataError(path.string() + " has no results array");
  }
  std::vector<AttackResult> results;
  for (const auto& r : doc["results"]) results.push_back(attack_result_from_json(r, schema));
  if (results.empty()) throw DataError(path.string() + " holds no results");
  write_analysis(cfg, results, schema, top_k, out);
  return kExitOk;
}

// ---------------------------------------------------------------- realism

int cmd_realism(const Overrides& o, std::ostream& out) {
  RunConfig cfg = load_config(o);
  Pipeline p = load_pipeline(cfg);
  apply_masks(o, p.env->schema(), cfg.attack);
  const auto& real = p.split.test.rows;
  if (real.empty()) throw DataError("the test split is empty");

  const ForestParams disc = discriminator_params(cfg.model.forest.seed);
  const std::uint64_t seed_a = derive_seed(cfg.attack.seed, 1);
  const std::uint64_t seed_b = derive_seed(cfg.attack.seed, 2);
  json doc = provenance(cfg);
  doc["seed_a"] = seed_a;
  doc["seed_b"] = seed_b;
  for (const bool gibbs : {false, true}) {
    AttackConfig gen = cfg.attack;
    gen.gibbs = gibbs;
    const RealismResult r = realism_discriminator(real, gen, *p.model, *p.env, disc,
                                                  seed_a, seed_b, cfg.worker_count());
    const std::string key = gibbs ? "gibbs_on" : "gibbs_off";
    doc[key] = {{"fail_rate", r.fail_rate},
                {"n_real", r.n_real},
                {"n_train_generated", r.n_train_generated},
                {"n_test_generated", r.n_test_generated}};
    out << key << " fail rate " << std::fixed << std::setprecision(4) << r.fail_rate
        << " (" << r.n_test_generated << " test counterfactuals)\n";
  }
  write_json(fs::path(cfg.out) / "realism.json", doc);
  return kExitOk;
}

// ---------------------------------------------------------------- score

struct ScoreFlags {
  std::vector<double> pds;
  std::optional<double> base_score;
  std::optional<double> pdo;
  std::optional<double> base_odds;
  std::optional<std::string> rounding;
};

int cmd_score(const Overrides& o, const ScoreFlags& f, std::ostream& out) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = RunConfig::load(o.config_path);
  ScorecardConfig& sc = cfg.scorecard;
  if (f.base_score) sc.base_score = *f.base_score;
  if (f.pdo) sc.pdo = *f.pdo;
  if (f.base_odds) sc.base_odds = *f.base_odds;
  if (f.rounding) sc.rounding = *f.rounding == "nearest" ? Rounding::kNearest : Rounding::kFloor;
  sc.validate();
  if (f.pds.empty()) throw ConfigError("score needs at least one --pd");

  json rows = json::array();
  for (double pd : f.pds) {
    const long s = pd_to_score(pd, sc);
    out << format_number(pd) << '\t' << s << '\n';
    rows.push_back({{"pd", pd}, {"score", s}});
  }
  if (o.out) {
    json doc = {{"tool", kTool},
                {"version", PERMUTEATTACK_VERSION},
                {"config", {{"scorecard", sc.to_json()}}},
                {"scores", rows}};
    write_json(fs::path(*o.out) / "score.json", doc);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PermuteAttack: genetic counterfactuals for tabular classifiers",
               std::string(kTool)};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(PERMUTEATTACK_VERSION));

  Overrides o;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config_path, "run configuration (JSON)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "attack seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto add_attack_flags = [&](CLI::App* sub) {
    sub->add_option("--target", o.target, "target class index");
    sub->add_option("--gibbs", o.gibbs, "conditional (Gibbs) sampling")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--workers", o.workers, "parallel attacks (default: all cores)");
    sub->add_option("--exclude", o.exclude, "features that must not change (a,b,...)")
        ->delimiter(',');
    sub->add_option("--allow-only", o.allow_only, "only these features may change")
        ->delimiter(',');
  };

  auto* train = app.add_subcommand("train", "split the data, train and save the forest");
  add_common(train, true);

  std::optional<std::size_t> row;
  std::string inline_instance;
  int n_cf = 1;
  auto* att = app.add_subcommand("attack", "counterfactuals for one instance");
  add_common(att, true);
  add_attack_flags(att);
  att->add_option("--row", row, "row index in the data file");
  att->add_option("--instance", inline_instance, "instance as a JSON object");
  att->add_option("--n-counterfactuals", n_cf, "distinct counterfactuals to report");

  auto* batch = app.add_subcommand("batch", "attack every test row");
  add_common(batch, true);
  add_attack_flags(batch);

  std::string results_path;
  std::size_t top_k = 3;
  auto* analyze = app.add_subcommand("analyze", "summaries from a results file");
  add_common(analyze, true);
  analyze->add_option("--results", results_path, "results.json (default: <out>/results.json)");
  analyze->add_option("--top", top_k, "number of most-changed features to list");

  auto* realism = app.add_subcommand("realism", "discriminator fail rates, Gibbs off and on");
  add_common(realism, true);
  add_attack_flags(realism);

  ScoreFlags sf;
  auto* score = app.add_subcommand("score", "probability of default to score points");
  add_common(score, false);
  score->add_option("--pd", sf.pds, "probability of default (repeatable)")
      ->check(CLI::Range(0.0, 1.0));
  score->add_option("--base-score", sf.base_score);
  score->add_option("--pdo", sf.pdo, "points to double the odds");
  score->add_option("--base-odds", sf.base_odds);
  score->add_option("--rounding", sf.rounding)->check(CLI::IsMember({"floor", "nearest"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*att) return cmd_attack(o, row, inline_instance, n_cf, out);
    if (*batch) return cmd_batch(o, out);
    if (*analyze) return cmd_analyze(o, results_path, top_k, out);
    if (*realism) return cmd_realism(o, out);
    if (*score) return cmd_score(o, sf, out);
  } catch (const BackendError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace permuteattack::cli
