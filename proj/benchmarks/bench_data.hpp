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


// German Credit fixture shared by the benchmark suites.

#ifndef PERMUTEATTACK_BENCHMARKS_BENCH_DATA_HPP_
#define PERMUTEATTACK_BENCHMARKS_BENCH_DATA_HPP_

#include <memory>

#include "permuteattack/attack.hpp"
#include "permuteattack/forest.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack::bench {

struct Fixture {
  TrainTestSplit split;
  std::unique_ptr<AttackEnvironment> env;
  std::unique_ptr<ForestClassifier> model;
};

inline const Fixture& german_credit() {
  static const Fixture fixture = [] {
    Fixture f;
    f.split = split_dataset(load_csv(PERMUTEATTACK_DATA_DIR "/german_credit.csv", "default"),
                            0.6, 42);
    f.env = std::make_unique<AttackEnvironment>(f.split.train, 5);
    ForestParams params;
    params.seed = 42;
    f.model = std::make_unique<ForestClassifier>(train_forest(f.env->train(), params),
                                                 f.env->schema());
    return f;
  }();
  return fixture;
}

}  // namespace permuteattack::bench

#endif  // PERMUTEATTACK_BENCHMARKS_BENCH_DATA_HPP_
