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

#include <numeric>
#include <vector>

#include "bench_data.hpp"
#include "permuteattack/rng.hpp"
#include "permuteattack/sampler.hpp"

namespace permuteattack::bench {
namespace {

void BM_PermuteFeature(benchmark::State& state) {
  const auto& f = german_credit();
  const Instance& x = f.split.test.rows[0];
  Rng rng(1);
  std::size_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(permute_feature(x, j, f.env->domain(), rng));
    j = (j + 1) % x.size();
  }
}
BENCHMARK(BM_PermuteFeature);

// Test rows rarely match a training context exactly, so this mostly
// exercises relaxation (memoized after the first pass).
void BM_ConditionalValues(benchmark::State& state) {
  const auto& f = german_credit();
  const auto& rows = f.split.test.rows;
  std::size_t i = 0;
  for (auto _ : state) {
    const Instance& x = rows[i % rows.size()];
    benchmark::DoNotOptimize(conditional_values(f.env->index(), x, i % x.size()));
    ++i;
  }
}
BENCHMARK(BM_ConditionalValues);

void BM_GibbsPerturb(benchmark::State& state) {
  const auto& f = german_credit();
  const auto& rows = f.split.test.rows;
  std::vector<std::size_t> features(static_cast<std::size_t>(state.range(0)));
  std::iota(features.begin(), features.end(), 0);
  Rng rng(2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gibbs_perturb(f.env->index(), f.env->domain(),
                                           rows[i++ % rows.size()], features, 5, rng));
  }
}
BENCHMARK(BM_GibbsPerturb)->Arg(1)->Arg(3)->Arg(8);

}  // namespace
}  // namespace permuteattack::bench
