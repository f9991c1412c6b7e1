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
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace efl {

using Bytes = std::vector<uint8_t>;
using Digest = std::array<uint8_t, 32>;

// Error taxonomy: every failure mode named in a module contract maps to one
// class here, so callers and tests can dispatch on the type instead of
// parsing message text.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CacheError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AggregationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed persisted data. Carries the byte offset the parser choked on.
struct FormatError : std::runtime_error {
    FormatError(const std::string& what, size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset(offset) {}
    size_t offset;
};

// Malformed wire message. Same shape as FormatError, distinct type on purpose:
// a bad file and a bad peer are handled by different layers.
struct DecodeError : std::runtime_error {
    DecodeError(const std::string& what, size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset(offset) {}
    size_t offset;
};

enum class ChannelFault : uint8_t {
    Closed,
    Timeout,
    BadVersion,
    ModeMismatch,
    QuoteRejected,
    TranscriptMismatch,
    AuthFailure,
    Oversize,
    BadFrame,
    CounterExhausted,
    Io,
};

const char* channel_fault_name(ChannelFault f);

struct ChannelError : std::runtime_error {
    ChannelError(ChannelFault fault, const std::string& what)
        : std::runtime_error(std::string(channel_fault_name(fault)) + ": " + what),
          fault(fault) {}
    ChannelFault fault;
};

std::string to_hex(const uint8_t* data, size_t len);
inline std::string to_hex(const Digest& d) { return to_hex(d.data(), d.size()); }
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }
// Strict parse; throws FormatError on odd length or non-hex characters.
Bytes from_hex(const std::string& hex);

}  // namespace efl
