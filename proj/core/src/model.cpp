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

#include "permuteattack/model.hpp"

#include <cmath>
#include <string>

#include "permuteattack/error.hpp"

namespace permuteattack {

std::string_view to_string(InputEncoding encoding) {
  return encoding == InputEncoding::kOneHot ? "onehot" : "ordinal";
}

InputEncoding parse_input_encoding(std::string_view name) {
  if (name == "onehot") return InputEncoding::kOneHot;
  if (name == "ordinal") return InputEncoding::kOrdinal;
  throw ConfigError("unknown input encoding '" + std::string(name) + "'");
}

void check_probability_vector(std::span<const double> probs,
                              std::size_t n_classes, double tolerance) {
  if (probs.size() != n_classes) {
    throw BackendError("probability vector has " + std::to_string(probs.size()) +
                       " entries, expected " + std::to_string(n_classes));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < -tolerance || p > 1.0 + tolerance) {
      throw BackendError("probability " + format_number(p) + " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw BackendError("probabilities sum to " + format_number(sum) +
                       " instead of 1");
  }
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<std::vector<double>> encode_batch(const Schema& schema,
                                              std::span<const Instance> batch,
                                              InputEncoding encoding) {
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const auto& instance : batch) {
    if (encoding == InputEncoding::kOneHot) {
      out.push_back(to_onehot(instance, schema));
    } else {
      validate_instance(schema, instance);
      out.push_back(instance.values);
    }
  }
  return out;
}

}  // namespace permuteattack
