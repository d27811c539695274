// Copyright 2026 The Domconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "domconv/provider.h"

#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <sstream>
#include <thread>

#include "domconv/errors.h"

namespace domconv {

SubprocessEncoder::SubprocessEncoder(const std::string& command,
                                     std::size_t dim)
    : command_(command), dim_(dim) {
  if (dim == 0) throw InvalidArgumentError("provider dim must be positive");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw CapabilityError(std::string("socketpair failed: ") +
                          std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw CapabilityError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::close(fds[0]);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  fd_ = fds[0];
}

SubprocessEncoder::~SubprocessEncoder() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
  }
  if (pid_ > 0) {
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
  }
}

std::string SubprocessEncoder::ReadLine() {
  for (;;) {
    const auto newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t got = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) {
      throw CapabilityError("embedding provider '" + command_ +
                            "' closed its output");
    }
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

std::vector<float> SubprocessEncoder::Encode(std::string_view text) {
  if (text.find('\n') != std::string_view::npos) {
    throw InvalidArgumentError("provider input must not contain newlines");
  }
  std::lock_guard lock(mu_);
  std::string request(text);
  request.push_back('\n');
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = ::send(fd_, request.data() + sent, request.size() - sent,
                             MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      throw CapabilityError("embedding provider '" + command_ +
                            "' is not accepting input");
    }
    sent += static_cast<std::size_t>(n);
  }
  return ParseProviderReply(ReadLine(), dim_);
}

std::vector<float> ParseProviderReply(std::string_view line, std::size_t dim) {
  std::vector<float> out;
  out.reserve(dim);
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    float value = 0.0f;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || !std::isfinite(value)) {
      throw FormatError("provider error: " + std::string(line));
    }
    out.push_back(value);
    p = next;
  }
  if (out.size() != dim) {
    std::ostringstream msg;
    msg << "provider returned " << out.size() << " values, expected " << dim;
    throw FormatError(msg.str());
  }
  const double norm = Norm(out);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw NormalizationError(0, norm, "provider reply");
  }
  return out;
}

BundleProvider::BundleProvider(const Bundle& bundle,
                               std::shared_ptr<StringEncoder> encoder)
    : bundle_(bundle), encoder_(std::move(encoder)) {
  if (encoder_ && encoder_->dim() != bundle_.dim()) {
    throw MismatchError("provider dim does not match the bundle");
  }
}

std::size_t BundleProvider::term_count() const {
  const std::size_t vocab = bundle_.text_memory.size();
  if (bundle_.class_tables.empty()) return vocab;
  return vocab + bundle_.manifest.class_names().size();
}

std::string_view BundleProvider::TermText(WordId term) const {
  const std::size_t vocab = bundle_.text_memory.size();
  if (term < vocab) return bundle_.text_memory.word(term);
  if (term < term_count()) return bundle_.manifest.class_names()[term - vocab];
  throw InvalidArgumentError("unknown term id " + std::to_string(term));
}

std::string_view BundleProvider::DomainName(DomainId domain) const {
  if (domain >= bundle_.manifest.domain_names().size()) {
    throw InvalidArgumentError("unknown domain id " + std::to_string(domain));
  }
  return bundle_.manifest.domain_names()[domain];
}

std::span<const float> BundleProvider::Composed(WordId term,
                                                DomainId domain) const {
  if (domain >= bundle_.composed.size()) {
    throw MismatchError("no composed table for domain id " +
                        std::to_string(domain));
  }
  const std::size_t vocab = bundle_.text_memory.size();
  if (term < vocab) return bundle_.composed[domain].embeddings->row(term);
  if (term < term_count()) {
    return bundle_.class_tables[domain]->row(term - vocab);
  }
  throw MismatchError("no composed table entry for term id " +
                      std::to_string(term) + " in domain '" +
                      std::string(DomainName(domain)) + "'");
}

std::vector<float> BundleProvider::EmbedString(std::string_view text) const {
  if (!encoder_) {
    throw CapabilityError(
        "early fusion needs a string-tier embedding provider; rerun with "
        "--provider <command>");
  }
  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(std::string(text));
    if (it != cache_.end()) return it->second;
  }
  auto embedding = encoder_->Encode(text);
  std::lock_guard lock(cache_mu_);
  cache_.emplace(std::string(text), embedding);
  return embedding;
}

std::vector<float> BundleProvider::DomainText(DomainId domain) const {
  const std::string_view name = DomainName(domain);
  if (bundle_.domain_text) {
    const auto row = bundle_.domain_text->row(domain);
    return {row.begin(), row.end()};
  }
  if (auto word = bundle_.text_memory.Find(name)) {
    const auto row = bundle_.text_memory.embedding(*word);
    return {row.begin(), row.end()};
  }
  if (encoder_) return EmbedString(name);
  throw CapabilityError("no text embedding for domain '" + std::string(name) +
                        "': add domain_text to the composed index or run "
                        "with --provider");
}

std::optional<WordId> BundleProvider::ClassTerm(ClassId cls) const {
  const auto& name = bundle_.manifest.class_names().at(cls);
  if (auto word = bundle_.text_memory.Find(name)) return *word;
  if (!bundle_.class_tables.empty()) {
    return static_cast<WordId>(bundle_.text_memory.size() + cls);
  }
  return std::nullopt;
}

std::optional<WordId> BundleProvider::DomainTerm(DomainId domain) const {
  return bundle_.text_memory.Find(DomainName(domain));
}

std::optional<std::vector<float>> BundleProvider::ClassText(
    ClassId cls) const {
  if (bundle_.class_text) {
    const auto row = bundle_.class_text->row(cls);
    return std::vector<float>(row.begin(), row.end());
  }
  const auto& name = bundle_.manifest.class_names().at(cls);
  if (auto word = bundle_.text_memory.Find(name)) {
    const auto row = bundle_.text_memory.embedding(*word);
    return std::vector<float>(row.begin(), row.end());
  }
  if (encoder_) return EmbedString(name);
  return std::nullopt;
}

}  // namespace domconv
