// Copyright 2026 The efl Authors
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

#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "efl/common.hpp"

namespace efl {

// A reliable, ordered byte stream. Implementations: an in-process duplex
// pipe (tests, single-process runs) and TCP (deployments). The channel layer
// is written against this interface only.
class ByteStream {
public:
    virtual ~ByteStream() = default;

    // Writes the whole span or throws ChannelError{Closed, Io}.
    virtual void write_all(std::span<const uint8_t> data) = 0;

    // Fills dst completely. Throws ChannelError{Timeout} when the deadline
    // passes, {Closed} when the peer is gone.
    virtual void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) = 0;

    virtual void close() = 0;
};

// Connected pair of in-process streams; what A writes, B reads.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_stream_pair();

// "host:port". ConfigError on malformed input.
std::pair<std::string, uint16_t> parse_address(const std::string& addr);

class TcpListener {
public:
    // Binds and listens; port 0 asks the kernel for a free port.
    explicit TcpListener(const std::string& addr);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const { return port_; }
    std::unique_ptr<ByteStream> accept(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

std::unique_ptr<ByteStream> tcp_connect(const std::string& addr,
                                        std::chrono::milliseconds timeout);

// Pass-through wrapper that counts bytes in each direction; the transport
// audit tests hang off this.
class CountingStream : public ByteStream {
public:
    explicit CountingStream(std::unique_ptr<ByteStream> inner)
        : inner_(std::move(inner)) {}

    void write_all(std::span<const uint8_t> data) override {
        inner_->write_all(data);
        tx_ += data.size();
    }
    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        inner_->read_exact(dst, n, timeout);
        rx_ += n;
    }
    void close() override { inner_->close(); }

    uint64_t bytes_tx() const { return tx_; }
    uint64_t bytes_rx() const { return rx_; }

private:
    std::unique_ptr<ByteStream> inner_;
    uint64_t tx_ = 0, rx_ = 0;
};

}  // namespace efl
