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

// Shared helpers for the channel/orchestration tests and the acceptance
// suite: deterministic identities, a two-thread handshake driver, and stream
// wrappers that tamper with or record traffic.

#include <exception>
#include <memory>
#include <thread>
#include <vector>

#include "efl/channel.hpp"
#include "efl/stream.hpp"

namespace efl::test {

struct TestTrust {
    ecc::SigningKey authority;
    Measurement measurement;
    NodeAttestation identity;
    VerifyPolicy policy;
};

inline TestTrust make_trust(uint8_t seed_byte = 1, const std::string& build_id = "efl-test",
                            const std::string& cfg = "cfg") {
    TestTrust t;
    std::array<uint8_t, 32> seed{};
    seed[0] = seed_byte;
    t.authority = authority_from_seed(seed);
    t.measurement = measure(build_id, Bytes(cfg.begin(), cfg.end()));
    t.identity = NodeAttestation{t.measurement, t.authority};
    t.policy = VerifyPolicy{t.authority.public_key, {t.measurement.digest}};
    return t;
}

struct ChannelPair {
    std::unique_ptr<SecureChannel> initiator;
    std::unique_ptr<SecureChannel> responder;
};

// Runs both handshake ends; rethrows the initiator's failure and surfaces
// the responder's through responder_error.
inline ChannelPair connect_pair(ChannelMode mode, const NodeAttestation& init_id,
                                const VerifyPolicy& init_policy,
                                const NodeAttestation& resp_id,
                                const VerifyPolicy& resp_policy,
                                std::unique_ptr<ByteStream> init_stream,
                                std::unique_ptr<ByteStream> resp_stream,
                                const ChannelOptions& opts,
                                std::exception_ptr* responder_error = nullptr) {
    ChannelPair pair;
    std::exception_ptr resp_err;
    std::thread responder([&] {
        try {
            pair.responder = SecureChannel::handshake(std::move(resp_stream),
                                                      ChannelRole::Responder, mode, resp_id,
                                                      resp_policy, opts);
        } catch (...) {
            resp_err = std::current_exception();
        }
    });
    std::exception_ptr init_err;
    try {
        pair.initiator = SecureChannel::handshake(std::move(init_stream),
                                                  ChannelRole::Initiator, mode, init_id,
                                                  init_policy, opts);
    } catch (...) {
        init_err = std::current_exception();
    }
    responder.join();
    if (responder_error) *responder_error = resp_err;
    if (init_err) std::rethrow_exception(init_err);
    return pair;
}

inline ChannelPair connect_pair(ChannelMode mode, const TestTrust& trust,
                                const ChannelOptions& opts = {}) {
    auto [a, b] = make_stream_pair();
    return connect_pair(mode, trust.identity, trust.policy, trust.identity, trust.policy,
                        std::move(a), std::move(b), opts);
}

// Flips one bit of the Nth byte that flows through the write path.
class FlippingStream : public ByteStream {
public:
    FlippingStream(std::unique_ptr<ByteStream> inner, uint64_t byte_offset, int bit)
        : inner_(std::move(inner)), target_(byte_offset), bit_(bit) {}

    void write_all(std::span<const uint8_t> data) override {
        if (written_ <= target_ && target_ < written_ + data.size()) {
            Bytes mutated(data.begin(), data.end());
            mutated[size_t(target_ - written_)] ^= uint8_t(1u << bit_);
            written_ += data.size();
            inner_->write_all(mutated);
            return;
        }
        written_ += data.size();
        inner_->write_all(data);
    }

    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        inner_->read_exact(dst, n, timeout);
    }
    void close() override { inner_->close(); }

    uint64_t bytes_written() const { return written_; }

private:
    std::unique_ptr<ByteStream> inner_;
    uint64_t target_;
    int bit_;
    uint64_t written_ = 0;
};

// Keeps a copy of everything written, for replay experiments.
class RecordingStream : public ByteStream {
public:
    explicit RecordingStream(std::unique_ptr<ByteStream> inner) : inner_(std::move(inner)) {}

    void write_all(std::span<const uint8_t> data) override {
        log_.insert(log_.end(), data.begin(), data.end());
        inner_->write_all(data);
    }
    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        inner_->read_exact(dst, n, timeout);
    }
    void close() override { inner_->close(); }

    const Bytes& written() const { return log_; }

private:
    std::unique_ptr<ByteStream> inner_;
    Bytes log_;
};

// Hands the test direct write access into the peer's read buffer.
class InjectableStream : public ByteStream {
public:
    explicit InjectableStream(std::unique_ptr<ByteStream> inner) : inner_(std::move(inner)) {}
    void write_all(std::span<const uint8_t> data) override { inner_->write_all(data); }
    void read_exact(uint8_t* dst, size_t n, std::chrono::milliseconds timeout) override {
        inner_->read_exact(dst, n, timeout);
    }
    void close() override { inner_->close(); }
    ByteStream& raw() { return *inner_; }

private:
    std::unique_ptr<ByteStream> inner_;
};

}  // namespace efl::test
