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

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <memory>
#include <string>
#include <string_view>

#include "odas/types.hpp"

namespace odas {

// Destination for newline-delimited JSON.
class LineSink {
 public:
  virtual ~LineSink() = default;
  // `line` excludes the trailing newline.
  virtual void write(std::string_view line) = 0;
  virtual void flush() {}
  virtual std::uint64_t dropped() const { return 0; }
};

class FileSink : public LineSink {
 public:
  explicit FileSink(const std::string& path);
  ~FileSink() override;
  FileSink(const FileSink&) = delete;
  FileSink& operator=(const FileSink&) = delete;
  void write(std::string_view line) override;
  void flush() override;

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
};

class StdoutSink : public LineSink {
 public:
  void write(std::string_view line) override;
  void flush() override;
};

// Newline-delimited JSON over one TCP connection. Lines written while the
// peer is unreachable are held in a bounded buffer and resent after a
// successful reconnect; once the buffer is full the oldest line is dropped
// and counted.
class TcpSink : public LineSink {
 public:
  TcpSink(std::string host, int port, std::size_t buffer_lines = 1024,
          std::chrono::milliseconds retry_interval = std::chrono::milliseconds(200));
  ~TcpSink() override;
  TcpSink(const TcpSink&) = delete;
  TcpSink& operator=(const TcpSink&) = delete;

  void write(std::string_view line) override;
  void flush() override;
  std::uint64_t dropped() const override { return dropped_; }
  bool connected() const { return fd_ >= 0; }
  std::size_t buffered() const { return pending_.size(); }

 private:
  bool try_connect(bool force);
  bool send_all(const std::string& data);
  void drain();
  void disconnect();

  std::string host_;
  int port_;
  std::size_t capacity_;
  std::chrono::milliseconds retry_interval_;
  std::chrono::steady_clock::time_point last_attempt_{};
  int fd_ = -1;
  std::deque<std::string> pending_;
  std::uint64_t dropped_ = 0;
};

// "-" is stdout, "tcp://host:port" a TCP sink, anything else a file path.
std::unique_ptr<LineSink> open_sink(const std::string& spec);

}  // namespace odas
