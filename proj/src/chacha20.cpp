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

#include "efl/chacha20.hpp"

#include <cstring>

namespace efl {

namespace {

inline uint32_t rotl(uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

inline uint32_t load_le32(const uint8_t* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
           (uint32_t(p[3]) << 24);
}

inline void quarter_round(uint32_t& a, uint32_t& b, uint32_t& c, uint32_t& d) {
    a += b; d ^= a; d = rotl(d, 16);
    c += d; b ^= c; b = rotl(b, 12);
    a += b; d ^= a; d = rotl(d, 8);
    c += d; b ^= c; b = rotl(b, 7);
}

}  // namespace

ChaCha20::ChaCha20(const uint8_t key[32], const uint8_t nonce[12], uint32_t counter) {
    // "expand 32-byte k"
    state_[0] = 0x61707865;
    state_[1] = 0x3320646e;
    state_[2] = 0x79622d32;
    state_[3] = 0x6b206574;
    for (int i = 0; i < 8; ++i) state_[4 + i] = load_le32(key + 4 * i);
    state_[12] = counter;
    state_[13] = load_le32(nonce);
    state_[14] = load_le32(nonce + 4);
    state_[15] = load_le32(nonce + 8);
}

void ChaCha20::refill() {
    uint32_t x[16];
    std::memcpy(x, state_, sizeof(x));
    for (int round = 0; round < 10; ++round) {
        quarter_round(x[0], x[4], x[8], x[12]);
        quarter_round(x[1], x[5], x[9], x[13]);
        quarter_round(x[2], x[6], x[10], x[14]);
        quarter_round(x[3], x[7], x[11], x[15]);
        quarter_round(x[0], x[5], x[10], x[15]);
        quarter_round(x[1], x[6], x[11], x[12]);
        quarter_round(x[2], x[7], x[8], x[13]);
        quarter_round(x[3], x[4], x[9], x[14]);
    }
    for (int i = 0; i < 16; ++i) {
        uint32_t v = x[i] + state_[i];
        block_[4 * i] = uint8_t(v);
        block_[4 * i + 1] = uint8_t(v >> 8);
        block_[4 * i + 2] = uint8_t(v >> 16);
        block_[4 * i + 3] = uint8_t(v >> 24);
    }
    state_[12] += 1;  // block counter
    block_used_ = 0;
}

void ChaCha20::xor_stream(uint8_t* buf, size_t len) {
    for (size_t i = 0; i < len; ++i) {
        if (block_used_ == 64) refill();
        buf[i] ^= block_[block_used_++];
    }
}

void ChaCha20::keystream(uint8_t* out, size_t len) {
    std::memset(out, 0, len);
    xor_stream(out, len);
}

}  // namespace efl
