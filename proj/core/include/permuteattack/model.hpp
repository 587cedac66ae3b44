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

#ifndef PERMUTEATTACK_MODEL_HPP_
#define PERMUTEATTACK_MODEL_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "permuteattack/tabular.hpp"

namespace permuteattack {

// Class probabilities for one instance; entries in [0,1] summing to 1.
using ProbabilityVector = std::vector<double>;

enum class ModelBackend { kBuiltinForest, kExternalProcess };
enum class InputEncoding { kOneHot, kOrdinal };

std::string_view to_string(InputEncoding encoding);
InputEncoding parse_input_encoding(std::string_view name);

// Throws `ProtocolError` (external) or `BackendError` when the vector is not
// a probability distribution over `n_classes` classes within `tolerance`.
void check_probability_vector(std::span<const double> probs,
                              std::size_t n_classes, double tolerance);

// Hard class; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> probs);

// Encodes a batch in the layout a backend expects.
std::vector<std::vector<double>> encode_batch(const Schema& schema,
                                              std::span<const Instance> batch,
                                              InputEncoding encoding);

// Black-box classifier. The attack only ever sees predict_proba.
class Classifier {
 public:
  virtual ~Classifier() = default;

  // One probability vector per instance, in order. Throws BackendError.
  virtual std::vector<ProbabilityVector> predict_proba(
      std::span<const Instance> batch) = 0;

  virtual std::size_t n_classes() const = 0;
  virtual ModelBackend backend() const = 0;
  virtual InputEncoding encoding() const = 0;

  // True when predict_proba may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }

  ProbabilityVector predict_one(const Instance& instance) {
    return predict_proba(std::span<const Instance>(&instance, 1)).front();
  }
};

}  // namespace permuteattack

#endif  // PERMUTEATTACK_MODEL_HPP_
