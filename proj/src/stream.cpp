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

#include "efl/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace efl {

namespace {

// Shared state of one direction of the in-process pipe.
struct PipeBuffer {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<uint8_t> data;
    bool closed = false;

    void write(std::span<const uint8_t> bytes) {
        std::lock_guard lock(mu);
        if (closed) throw ChannelError(ChannelFault::Closed, "pipe closed");
        data.insert(data.end(), bytes.begin(), bytes.end());
        cv.notify_all();
    }

    void read(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu);
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (data.size() < n) {
            if (closed) throw ChannelError(ChannelFault::Closed, "pipe closed by peer");
            if (cv.wait_until(lock, deadline) == std::cv_status::timeout &&
                data.size() < n)
                throw ChannelError(ChannelFault::Timeout, "pipe read timed out");
        }
        for (size_t i = 0; i < n; ++i) {
            dst[i] = data.front();
            data.pop_front();
        }
    }

    void close() {
        std::lock_guard lock(mu);
        closed = true;
        cv.notify_all();
    }
};

class PipeStream : public ByteStream {
public:
    PipeStream(std::shared_ptr<PipeBuffer> out, std::shared_ptr<PipeBuffer> in)
        : out_(std::move(out)), in_(std::move(in)) {}

    ~PipeStream() override { close(); }

    void write_all(std::span<const uint8_t> data) override { out_->write(data); }

    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        in_->read(dst, n, timeout);
    }

    void close() override {
        out_->close();
        in_->close();
    }

private:
    std::shared_ptr<PipeBuffer> out_, in_;
};

class TcpStream : public ByteStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
        }
    }

    void write_all(std::span<const uint8_t> data) override {
        size_t sent = 0;
        while (sent < data.size()) {
            ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) {
                if (n < 0 && errno == EINTR) continue;
                throw ChannelError(ChannelFault::Closed, "send failed: " +
                                                             std::string(strerror(errno)));
            }
            sent += size_t(n);
        }
    }

    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        size_t got = 0;
        while (got < n) {
            auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (remain.count() <= 0)
                throw ChannelError(ChannelFault::Timeout, "socket read timed out");
            struct pollfd pfd{fd_, POLLIN, 0};
            int pr = ::poll(&pfd, 1, int(remain.count()));
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw ChannelError(ChannelFault::Io, "poll failed");
            }
            if (pr == 0)
                throw ChannelError(ChannelFault::Timeout, "socket read timed out");
            ssize_t r = ::recv(fd_, dst + got, n - got, 0);
            if (r == 0) throw ChannelError(ChannelFault::Closed, "peer closed socket");
            if (r < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw ChannelError(ChannelFault::Io, "recv failed: " +
                                                         std::string(strerror(errno)));
            }
            got += size_t(r);
        }
    }

    // close() only shuts the socket down so a reader blocked in poll()
    // wakes up safely; the descriptor is released by the destructor.
    void close() override {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

private:
    int fd_;
};

sockaddr_in make_sockaddr(const std::string& addr) {
    auto [host, port] = parse_address(addr);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
        throw ConfigError("cannot parse host address: " + host);
    return sa;
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_stream_pair() {
    auto ab = std::make_shared<PipeBuffer>();
    auto ba = std::make_shared<PipeBuffer>();
    return {std::make_unique<PipeStream>(ab, ba), std::make_unique<PipeStream>(ba, ab)};
}

std::pair<std::string, uint16_t> parse_address(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= addr.size())
        throw ConfigError("address must be host:port, got '" + addr + "'");
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in address '" + addr + "'");
    }
    if (port < 0 || port > 65535) throw ConfigError("port out of range in '" + addr + "'");
    return {addr.substr(0, colon), uint16_t(port)};
}

TcpListener::TcpListener(const std::string& addr) {
    sockaddr_in sa = make_sockaddr(addr);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("cannot bind " + addr + ": " + strerror(errno));
    }
    if (::listen(fd_, 16) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("listen failed on " + addr);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::accept(std::chrono::milliseconds timeout) {
    struct pollfd pfd{fd_, POLLIN, 0};
    int pr = ::poll(&pfd, 1, int(timeout.count()));
    if (pr == 0) throw ChannelError(ChannelFault::Timeout, "accept timed out");
    if (pr < 0) throw ChannelError(ChannelFault::Io, "poll on listener failed");
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw ChannelError(ChannelFault::Io, "accept failed");
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpStream>(fd);
}

std::unique_ptr<ByteStream> tcp_connect(const std::string& addr,
                                        std::chrono::milliseconds timeout) {
    sockaddr_in sa = make_sockaddr(addr);
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw IoError("socket() failed");
        if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return std::make_unique<TcpStream>(fd);
        }
        ::close(fd);
        // the peer may simply not be listening yet; retry until the deadline
        if (std::chrono::steady_clock::now() >= deadline)
            throw ChannelError(ChannelFault::Timeout, "cannot connect to " + addr);
        struct timespec ts{0, 20 * 1000 * 1000};
        ::nanosleep(&ts, nullptr);
    }
}

}  // namespace efl
