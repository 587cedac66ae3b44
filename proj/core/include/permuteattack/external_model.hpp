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

// Adapter for classifiers that live in another process.
//
// Protocol: newline-delimited JSON over the child's stdin/stdout, one
// request in flight at a time.
//
//   > {"op":"schema"}
//   < {"n_features":m,"n_classes":K,"encoding":"onehot"|"ordinal"}
//   > {"op":"predict","instances":[[...],...]}
//   < {"probs":[[...],...]}
//
// Numbers in requests are written in shortest round-trip form, so integral
// values appear without a fractional part ("1", not "1.0").

#ifndef PERMUTEATTACK_EXTERNAL_MODEL_HPP_
#define PERMUTEATTACK_EXTERNAL_MODEL_HPP_

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permuteattack/model.hpp"
#include "permuteattack/tabular.hpp"

namespace permuteattack {

struct ExternalModelConfig {
  // argv of the model server; command[0] is resolved through PATH.
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{30000};
  // Tolerance on sum(probs) == 1.
  double sum_tolerance = 1e-6;
  bool keep_transcript = false;
};

struct ModelHandshake {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  InputEncoding encoding = InputEncoding::kOneHot;
};

namespace wire {

std::string schema_request();
std::string predict_request(const std::vector<std::vector<double>>& rows);

// Both parsers throw ProtocolError on anything that is not a well-formed
// response of the expected shape.
ModelHandshake parse_schema_response(std::string_view line);
std::vector<ProbabilityVector> parse_predict_response(std::string_view line,
                                                      std::size_t n_rows,
                                                      std::size_t n_classes,
                                                      double sum_tolerance);

}  // namespace wire

struct TranscriptLine {
  bool outgoing = false;
  std::string text;
};

class ExternalProcessClassifier final : public Classifier {
 public:
  // Launches the process and performs the schema handshake. The handshake
  // width must match `schema` under the announced encoding.
  ExternalProcessClassifier(Schema schema, ExternalModelConfig config);
  ~ExternalProcessClassifier() override;

  ExternalProcessClassifier(const ExternalProcessClassifier&) = delete;
  ExternalProcessClassifier& operator=(const ExternalProcessClassifier&) = delete;

  std::vector<ProbabilityVector> predict_proba(
      std::span<const Instance> batch) override;
  std::size_t n_classes() const override { return handshake_.n_classes; }
  ModelBackend backend() const override { return ModelBackend::kExternalProcess; }
  InputEncoding encoding() const override { return handshake_.encoding; }

  const ModelHandshake& handshake() const { return handshake_; }
  const std::vector<TranscriptLine>& transcript() const { return transcript_; }
  // "> request\n< response\n..." in exchange order.
  std::string transcript_text() const;

 private:
  class Process;

  std::string exchange(const std::string& request);

  Schema schema_;
  ExternalModelConfig config_;
  std::unique_ptr<Process> process_;
  ModelHandshake handshake_;
  std::vector<TranscriptLine> transcript_;
  bool broken_ = false;
  std::mutex mu_;
};

}  // namespace permuteattack

#endif  // PERMUTEATTACK_EXTERNAL_MODEL_HPP_
