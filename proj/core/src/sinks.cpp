// Copyright 2026 The odas-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "odas/sinks.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "odas/types.hpp"

namespace odas {

FileSink::FileSink(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) {
    throw Error("cannot open output " + path + ": " + std::strerror(errno));
  }
}

FileSink::~FileSink() {
  if (file_ != nullptr) std::fclose(file_);
}

void FileSink::write(std::string_view line) {
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fputc('\n', file_) == EOF) {
    throw Error("write failed on " + path_);
  }
}

void FileSink::flush() {
  if (std::fflush(file_) != 0) throw Error("flush failed on " + path_);
}

void StdoutSink::write(std::string_view line) {
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fputc('\n', stdout);
}

void StdoutSink::flush() { std::fflush(stdout); }

TcpSink::TcpSink(std::string host, int port, std::size_t buffer_lines,
                 std::chrono::milliseconds retry_interval)
    : host_(std::move(host)),
      port_(port),
      capacity_(buffer_lines),
      retry_interval_(retry_interval) {
  try_connect(true);
}

TcpSink::~TcpSink() {
  try_connect(true);
  drain();
  disconnect();
}

void TcpSink::disconnect() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

bool TcpSink::try_connect(bool force) {
  if (fd_ >= 0) return true;
  const auto now = std::chrono::steady_clock::now();
  if (!force && now - last_attempt_ < retry_interval_) return false;
  last_attempt_ = now;

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0) return false;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  return fd_ >= 0;
}

bool TcpSink::send_all(const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      disconnect();
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void TcpSink::drain() {
  while (fd_ >= 0 && !pending_.empty()) {
    if (!send_all(pending_.front())) return;
    pending_.pop_front();
  }
}

void TcpSink::write(std::string_view line) {
  if (capacity_ == 0) {
    ++dropped_;
    return;
  }
  if (pending_.size() == capacity_) {
    pending_.pop_front();
    ++dropped_;
  }
  pending_.emplace_back(std::string(line) + "\n");
  if (try_connect(false)) drain();
}

void TcpSink::flush() {
  if (try_connect(false)) drain();
}

std::unique_ptr<LineSink> open_sink(const std::string& spec) {
  if (spec == "-") return std::make_unique<StdoutSink>();
  constexpr std::string_view kTcp = "tcp://";
  if (spec.rfind(kTcp, 0) == 0) {
    const std::string rest = spec.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw Error("sink: expected tcp://host:port, got " + spec);
    }
    int port = 0;
    try {
      std::size_t used = 0;
      port = std::stoi(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1) throw Error("");
    } catch (...) {
      throw Error("sink: bad port in " + spec);
    }
    if (port <= 0 || port > 65535) throw Error("sink: bad port in " + spec);
    return std::make_unique<TcpSink>(rest.substr(0, colon), port);
  }
  return std::make_unique<FileSink>(spec);
}

}  // namespace odas
