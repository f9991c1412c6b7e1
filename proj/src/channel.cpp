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

#include "efl/channel.hpp"

#include <cstring>

#include "efl/aead.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

constexpr uint8_t kProtocolVersion = 0x01;
constexpr uint8_t kTagHello = 0x01;
constexpr uint8_t kTagFinished = 0x02;
constexpr uint8_t kTagRecord = 0x03;

// record bodies carry the AEAD tag; handshake bodies are small
constexpr size_t kMaxFrameBody = kMaxPayload + 64;

std::array<uint8_t, kAeadNonceSize> record_nonce(uint64_t counter) {
    std::array<uint8_t, kAeadNonceSize> nonce{};
    for (int i = 0; i < 8; ++i) nonce[i] = uint8_t(counter >> (8 * i));
    return nonce;
}

std::array<uint8_t, 9> record_aad(ChannelRole sender_role, uint64_t counter) {
    std::array<uint8_t, 9> aad{};
    aad[0] = sender_role == ChannelRole::Initiator ? 0x01 : 0x02;
    for (int i = 0; i < 8; ++i) aad[1 + i] = uint8_t(counter >> (8 * i));
    return aad;
}

struct HelloMessage {
    uint8_t version = kProtocolVersion;
    ChannelMode mode = ChannelMode::Native;
    ecc::Key32 eph_pub{};
    Quote quote;

    Bytes encode() const {
        Bytes out;
        out.push_back(version);
        out.push_back(uint8_t(mode));
        if (mode == ChannelMode::Attested) {
            out.insert(out.end(), eph_pub.begin(), eph_pub.end());
            auto q = quote.encode();
            out.insert(out.end(), q.begin(), q.end());
        }
        return out;
    }
};

}  // namespace

void SecureChannel::write_frame(uint8_t tag, std::span<const uint8_t> body) {
    Bytes frame;
    uint32_t len = uint32_t(body.size() + 1);
    frame.reserve(4 + len);
    for (int i = 0; i < 4; ++i) frame.push_back(uint8_t(len >> (8 * i)));
    frame.push_back(tag);
    frame.insert(frame.end(), body.begin(), body.end());
    stream_->write_all(frame);
    bytes_tx_ += frame.size();
}

Bytes SecureChannel::read_frame(uint8_t expect_tag, std::chrono::milliseconds timeout) {
    uint8_t len_bytes[4];
    stream_->read_exact(len_bytes, 4, timeout);
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= uint32_t(len_bytes[i]) << (8 * i);
    if (len == 0 || len > kMaxFrameBody + 1)
        abort_with(ChannelFault::BadFrame, "frame length " + std::to_string(len));
    Bytes body(len);
    stream_->read_exact(body.data(), body.size(), timeout);
    bytes_rx_ += 4 + body.size();
    if (body[0] != expect_tag)
        abort_with(ChannelFault::BadFrame, "unexpected frame tag " +
                                               std::to_string(int(body[0])));
    body.erase(body.begin());
    return body;
}

void SecureChannel::abort_with(ChannelFault fault, const std::string& what) {
    aborted_ = true;
    if (stream_) stream_->close();
    throw ChannelError(fault, what);
}

std::unique_ptr<SecureChannel> SecureChannel::handshake(
    std::unique_ptr<ByteStream> stream, ChannelRole role, ChannelMode mode,
    const NodeAttestation& identity, const VerifyPolicy& policy,
    const ChannelOptions& opts) {
    auto ch = std::unique_ptr<SecureChannel>(new SecureChannel());
    ch->stream_ = std::move(stream);
    ch->mode_ = mode;
    ch->role_ = role;
    ch->opts_ = opts;

    auto started = std::chrono::steady_clock::now();
    try {
        HelloMessage own;
        own.mode = mode;
        ecc::DhKeyPair eph;
        if (mode == ChannelMode::Attested) {
            eph = ecc::dh_keypair_random();
            own.eph_pub = eph.public_key;
            Digest report = Sha256::digest(eph.public_key);
            own.quote = gen_quote(identity.authority, identity.measurement, report);
        }
        Bytes own_hello = own.encode();

        Bytes peer_hello;
        if (role == ChannelRole::Initiator) {
            ch->write_frame(kTagHello, own_hello);
            peer_hello = ch->read_frame(kTagHello, opts.handshake_timeout);
        } else {
            peer_hello = ch->read_frame(kTagHello, opts.handshake_timeout);
            ch->write_frame(kTagHello, own_hello);
        }

        if (peer_hello.size() < 2 || peer_hello[0] != kProtocolVersion)
            ch->abort_with(ChannelFault::BadVersion, "peer protocol version unsupported");
        if (peer_hello[1] != uint8_t(mode))
            ch->abort_with(ChannelFault::ModeMismatch,
                           "peer negotiated a different channel mode");

        if (mode == ChannelMode::Native) {
            if (peer_hello.size() != 2)
                ch->abort_with(ChannelFault::BadFrame, "oversized native hello");
            ch->handshake_ms_ =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          started)
                    .count();
            return ch;
        }

        if (peer_hello.size() != 2 + 32 + Quote::kEncodedSize)
            ch->abort_with(ChannelFault::BadFrame, "malformed attested hello");
        ecc::Key32 peer_pub;
        std::memcpy(peer_pub.data(), peer_hello.data() + 2, 32);
        Quote peer_quote = Quote::decode(
            std::span<const uint8_t>(peer_hello.data() + 34, Quote::kEncodedSize));

        // attestation gate: no key material is derived past this point unless
        // the peer quote checks out
        Digest expected_report = Sha256::digest(peer_pub);
        QuoteVerdict verdict = verify_quote(policy, peer_quote, expected_report);
        if (verdict != QuoteVerdict::Accept)
            ch->abort_with(ChannelFault::QuoteRejected, quote_verdict_name(verdict));

        auto shared = ecc::dh_shared(eph.secret, peer_pub);
        if (!shared)
            ch->abort_with(ChannelFault::AuthFailure, "peer key agreement failed");

        const Bytes& hello_i = role == ChannelRole::Initiator ? own_hello : peer_hello;
        const Bytes& hello_r = role == ChannelRole::Initiator ? peer_hello : own_hello;
        Sha256 th;
        th.update(hello_i);
        th.update(hello_r);
        Digest transcript = th.finish();

        const char* info = "efl.channel.keys.v1";
        Bytes okm = hkdf_sha256(
            *shared, transcript,
            std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(info),
                                     std::strlen(info)),
            128);
        std::array<uint8_t, 32> key_i2r, key_r2i, fin_i, fin_r;
        std::memcpy(key_i2r.data(), okm.data(), 32);
        std::memcpy(key_r2i.data(), okm.data() + 32, 32);
        std::memcpy(fin_i.data(), okm.data() + 64, 32);
        std::memcpy(fin_r.data(), okm.data() + 96, 32);

        ch->send_key_ = role == ChannelRole::Initiator ? key_i2r : key_r2i;
        ch->recv_key_ = role == ChannelRole::Initiator ? key_r2i : key_i2r;

        Digest own_fin = hmac_sha256(role == ChannelRole::Initiator ? fin_i : fin_r,
                                     transcript);
        Digest peer_fin_want = hmac_sha256(role == ChannelRole::Initiator ? fin_r : fin_i,
                                           transcript);

        auto check_fin = [&](const Bytes& got) {
            if (got.size() != peer_fin_want.size() ||
                !std::equal(got.begin(), got.end(), peer_fin_want.begin()))
                ch->abort_with(ChannelFault::TranscriptMismatch,
                               "peer finished MAC does not match");
        };
        if (role == ChannelRole::Initiator) {
            ch->write_frame(kTagFinished, own_fin);
            check_fin(ch->read_frame(kTagFinished, opts.handshake_timeout));
        } else {
            check_fin(ch->read_frame(kTagFinished, opts.handshake_timeout));
            ch->write_frame(kTagFinished, own_fin);
        }
    } catch (const ChannelError&) {
        if (ch->stream_) ch->stream_->close();
        ch->aborted_ = true;
        throw;
    }

    ch->handshake_ms_ = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return ch;
}

void SecureChannel::send(std::span<const uint8_t> payload) {
    if (!open()) throw ChannelError(ChannelFault::Closed, "channel is not open");
    if (payload.size() > kMaxPayload)
        throw ChannelError(ChannelFault::Oversize,
                           std::to_string(payload.size()) + " bytes");  // channel stays usable

    if (mode_ == ChannelMode::Native) {
        write_frame(kTagRecord, payload);
        return;
    }
    if (send_counter_ == UINT64_MAX)
        abort_with(ChannelFault::CounterExhausted, "send counter");
    auto nonce = record_nonce(send_counter_);
    auto aad = record_aad(role_, send_counter_);
    Bytes sealed = aead_seal(send_key_, nonce, aad, payload);
    send_counter_ += 1;
    write_frame(kTagRecord, sealed);
}

Bytes SecureChannel::recv() {
    if (!open()) throw ChannelError(ChannelFault::Closed, "channel is not open");
    Bytes body = read_frame(kTagRecord, opts_.io_timeout);
    if (mode_ == ChannelMode::Native) return body;

    if (recv_counter_ == UINT64_MAX)
        abort_with(ChannelFault::CounterExhausted, "recv counter");
    auto nonce = record_nonce(recv_counter_);
    ChannelRole peer = role_ == ChannelRole::Initiator ? ChannelRole::Responder
                                                       : ChannelRole::Initiator;
    auto aad = record_aad(peer, recv_counter_);
    auto opened = aead_open(recv_key_, nonce, aad, body);
    if (!opened)
        abort_with(ChannelFault::AuthFailure,
                   "record " + std::to_string(recv_counter_) + " failed to authenticate");
    recv_counter_ += 1;
    return std::move(*opened);
}

void SecureChannel::close() {
    if (stream_) stream_->close();
    aborted_ = true;
}

}  // namespace efl
