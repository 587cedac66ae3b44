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

#ifndef PERMUTEATTACK_ERROR_HPP_
#define PERMUTEATTACK_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace permuteattack {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, schema violations, invalid instances.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a transform.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The model backend failed to produce predictions.
class BackendError : public Error {
 public:
  using Error::Error;
};

// The external model violated the wire protocol (bad line, bad shape,
// non-normalized probabilities, timeout).
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace permuteattack

#endif  // PERMUTEATTACK_ERROR_HPP_
