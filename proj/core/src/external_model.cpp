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

#include "permuteattack/external_model.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "permuteattack/error.hpp"

namespace permuteattack {
namespace wire {

std::string schema_request() { return R"({"op":"schema"})"; }

std::string predict_request(const std::vector<std::vector<double>>& rows) {
  std::string out = R"({"op":"predict","instances":[)";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r) out.push_back(',');
    out.push_back('[');
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out.push_back(',');
      out += format_number(rows[r][c]);
    }
    out.push_back(']');
  }
  out += "]}";
  return out;
}

namespace {

nlohmann::json parse_object(std::string_view line) {
  nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProtocolError("malformed response line: '" + std::string(line) + "'");
  }
  if (doc.contains("error") && doc["error"].is_string()) {
    throw ProtocolError("external model reported: " +
                        doc["error"].get<std::string>());
  }
  return doc;
}

std::size_t positive_count(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_unsigned() ||
      doc[key].get<std::size_t>() == 0) {
    throw ProtocolError(std::string("handshake field '") + key +
                        "' missing or not a positive integer");
  }
  return doc[key].get<std::size_t>();
}

}  // namespace

ModelHandshake parse_schema_response(std::string_view line) {
  const auto doc = parse_object(line);
  ModelHandshake hs;
  hs.n_features = positive_count(doc, "n_features");
  hs.n_classes = positive_count(doc, "n_classes");
  if (hs.n_classes < 2) throw ProtocolError("handshake announces fewer than 2 classes");
  if (!doc.contains("encoding") || !doc["encoding"].is_string()) {
    throw ProtocolError("handshake field 'encoding' missing");
  }
  const auto enc = doc["encoding"].get<std::string>();
  if (enc == "onehot") {
    hs.encoding = InputEncoding::kOneHot;
  } else if (enc == "ordinal") {
    hs.encoding = InputEncoding::kOrdinal;
  } else {
    throw ProtocolError("handshake announces unknown encoding '" + enc + "'");
  }
  return hs;
}

std::vector<ProbabilityVector> parse_predict_response(std::string_view line,
                                                      std::size_t n_rows,
                                                      std::size_t n_classes,
                                                      double sum_tolerance) {
  const auto doc = parse_object(line);
  if (!doc.contains("probs") || !doc["probs"].is_array()) {
    throw ProtocolError("response has no 'probs' array");
  }
  const auto& rows = doc["probs"];
  if (rows.size() != n_rows) {
    throw ProtocolError("response has " + std::to_string(rows.size()) +
                        " rows, request had " + std::to_string(n_rows));
  }
  std::vector<ProbabilityVector> out;
  out.reserve(n_rows);
  for (const auto& row : rows) {
    if (!row.is_array()) throw ProtocolError("probability row is not an array");
    ProbabilityVector probs;
    for (const auto& v : row) {
      if (!v.is_number()) throw ProtocolError("probability entry is not a number");
      probs.push_back(v.get<double>());
    }
    try {
      check_probability_vector(probs, n_classes, sum_tolerance);
    } catch (const BackendError& e) {
      throw ProtocolError(e.what());
    }
    out.push_back(std::move(probs));
  }
  return out;
}

}  // namespace wire

// Child process whose stdin and stdout are both bound to one end of a
// socketpair. send() with MSG_NOSIGNAL keeps a dead child from raising
// SIGPIPE in the host.
class ExternalProcessClassifier::Process {
 public:
  explicit Process(const std::vector<std::string>& command) {
    if (command.empty()) throw ConfigError("external model command is empty");
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw BackendError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    std::vector<char*> argv;
    for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw BackendError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
  }

  ~Process() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
    }
    if (pid_ > 0) {
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError("external model connection closed while writing");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        throw ProtocolError("external model timed out after " +
                            std::to_string(timeout.count()) + " ms");
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError("external model connection failed while reading");
      }
      if (n == 0) throw BackendError("external model exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

ExternalProcessClassifier::ExternalProcessClassifier(Schema schema,
                                                     ExternalModelConfig config)
    : schema_(std::move(schema)), config_(std::move(config)) {
  if (config_.timeout.count() <= 0) throw ConfigError("timeout must be positive");
  process_ = std::make_unique<Process>(config_.command);
  handshake_ = wire::parse_schema_response(exchange(wire::schema_request()));
  const std::size_t expected = handshake_.encoding == InputEncoding::kOneHot
                                   ? schema_.onehot_width()
                                   : schema_.size();
  if (handshake_.n_features != expected) {
    throw ProtocolError("external model expects " +
                        std::to_string(handshake_.n_features) + " " +
                        std::string(to_string(handshake_.encoding)) +
                        " features, schema provides " + std::to_string(expected));
  }
}

ExternalProcessClassifier::~ExternalProcessClassifier() = default;

std::string ExternalProcessClassifier::exchange(const std::string& request) {
  if (broken_) {
    throw BackendError("external model connection unusable after an earlier failure");
  }
  try {
    if (config_.keep_transcript) transcript_.push_back({true, request});
    process_->write_line(request);
    std::string response = process_->read_line(config_.timeout);
    if (config_.keep_transcript) transcript_.push_back({false, response});
    return response;
  } catch (const BackendError&) {
    broken_ = true;
    throw;
  }
}

std::vector<ProbabilityVector> ExternalProcessClassifier::predict_proba(
    std::span<const Instance> batch) {
  if (batch.empty()) return {};
  std::lock_guard<std::mutex> lock(mu_);
  const auto rows = encode_batch(schema_, batch, handshake_.encoding);
  const auto response = exchange(wire::predict_request(rows));
  try {
    return wire::parse_predict_response(response, batch.size(),
                                        handshake_.n_classes,
                                        config_.sum_tolerance);
  } catch (const ProtocolError&) {
    broken_ = true;
    throw;
  }
}

std::string ExternalProcessClassifier::transcript_text() const {
  std::string out;
  for (const auto& line : transcript_) {
    out += line.outgoing ? "> " : "< ";
    out += line.text;
    out.push_back('\n');
  }
  return out;
}

}  // namespace permuteattack
