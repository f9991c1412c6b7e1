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

#include "efl/common.hpp"

namespace efl {

const char* channel_fault_name(ChannelFault f) {
    switch (f) {
        case ChannelFault::Closed: return "channel closed";
        case ChannelFault::Timeout: return "channel timeout";
        case ChannelFault::BadVersion: return "protocol version mismatch";
        case ChannelFault::ModeMismatch: return "channel mode mismatch";
        case ChannelFault::QuoteRejected: return "peer quote rejected";
        case ChannelFault::TranscriptMismatch: return "handshake transcript mismatch";
        case ChannelFault::AuthFailure: return "record authentication failure";
        case ChannelFault::Oversize: return "payload exceeds frame limit";
        case ChannelFault::BadFrame: return "malformed frame";
        case ChannelFault::CounterExhausted: return "nonce counter exhausted";
        case ChannelFault::Io: return "stream i/o error";
    }
    return "unknown channel fault";
}

std::string to_hex(const uint8_t* data, size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw FormatError("hex string has odd length", hex.size());
    auto nibble = [&](char c, size_t pos) -> uint8_t {
        if (c >= '0' && c <= '9') return uint8_t(c - '0');
        if (c >= 'a' && c <= 'f') return uint8_t(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return uint8_t(c - 'A' + 10);
        throw FormatError("invalid hex character", pos);
    };
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = uint8_t(nibble(hex[2 * i], 2 * i) << 4) | nibble(hex[2 * i + 1], 2 * i + 1);
    }
    return out;
}

}  // namespace efl
