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

#include <array>
#include <atomic>
#include <chrono>
#include <memory>
#include <span>

#include "efl/attest.hpp"
#include "efl/stream.hpp"

namespace efl {

// Attested channel: a mutually attested key-agreement handshake followed by
// an AEAD record layer over any reliable byte stream. Each side sends an
// ephemeral public key plus a quote whose report data is the hash of that
// key; keys are derived from the shared secret and the handshake transcript,
// and finished messages confirm both sides saw the same bytes. Native mode
// keeps the framing and drops the quotes and the crypto - that is the
// baseline the overhead benchmark compares against.
//
// Wire format: every unit is u32-le length, then a 1-byte tag, then the
// body. The first handshake body leads with protocol version 0x01.

enum class ChannelMode : uint8_t { Native = 0, Attested = 1 };
enum class ChannelRole : uint8_t { Initiator = 0, Responder = 1 };

// What a node needs to prove itself: its measurement and the authority key
// that signs quotes (the simulation's stand-in for asking the hardware).
struct NodeAttestation {
    Measurement measurement;
    ecc::SigningKey authority;
};

struct ChannelOptions {
    std::chrono::milliseconds handshake_timeout{10000};
    std::chrono::milliseconds io_timeout{60000};
};

inline constexpr size_t kMaxPayload = 16 * 1024 * 1024;

class SecureChannel {
public:
    // Establishes the channel or throws ChannelError; the stream is closed
    // on any failure. Quote verification happens before key derivation.
    static std::unique_ptr<SecureChannel> handshake(std::unique_ptr<ByteStream> stream,
                                                    ChannelRole role, ChannelMode mode,
                                                    const NodeAttestation& identity,
                                                    const VerifyPolicy& policy,
                                                    const ChannelOptions& opts = {});

    // Oversize payloads throw without poisoning the channel; every other
    // failure aborts it.
    void send(std::span<const uint8_t> payload);
    Bytes recv();

    void close();
    bool open() const { return !aborted_ && stream_ != nullptr; }

    ChannelMode mode() const { return mode_; }
    double handshake_millis() const { return handshake_ms_; }
    uint64_t bytes_tx() const { return bytes_tx_; }
    uint64_t bytes_rx() const { return bytes_rx_; }

    // test seam: fast-forwards the nonce counters to probe exhaustion
    void debug_set_counters(uint64_t send_counter, uint64_t recv_counter) {
        send_counter_ = send_counter;
        recv_counter_ = recv_counter;
    }

private:
    SecureChannel() = default;

    void write_frame(uint8_t tag, std::span<const uint8_t> body);
    Bytes read_frame(uint8_t expect_tag, std::chrono::milliseconds timeout);
    [[noreturn]] void abort_with(ChannelFault fault, const std::string& what);

    std::unique_ptr<ByteStream> stream_;
    ChannelMode mode_ = ChannelMode::Native;
    ChannelRole role_ = ChannelRole::Initiator;
    ChannelOptions opts_;
    std::atomic<bool> aborted_{false};

    std::array<uint8_t, 32> send_key_{}, recv_key_{};
    uint64_t send_counter_ = 0, recv_counter_ = 0;
    double handshake_ms_ = 0;
    uint64_t bytes_tx_ = 0, bytes_rx_ = 0;
};

}  // namespace efl
