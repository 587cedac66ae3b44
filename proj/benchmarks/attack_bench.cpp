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


#include <benchmark/benchmark.h>

#include "bench_data.hpp"

namespace permuteattack::bench {
namespace {

// A full attack on one test row; arg 1 switches on Gibbs sampling.
void BM_Attack(benchmark::State& state) {
  const auto& f = german_credit();
  AttackConfig cfg;
  cfg.gibbs = state.range(0) != 0;
  std::size_t i = 0;
  for (auto _ : state) {
    const Instance& x = f.split.test.rows[i % f.split.test.rows.size()];
    const int target = 1 - static_cast<int>(argmax(f.model->predict_one(x)));
    cfg.seed = i++;
    benchmark::DoNotOptimize(attack(x, target, *f.model, *f.env, cfg));
  }
}
BENCHMARK(BM_Attack)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace permuteattack::bench
