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

#include <cstddef>
#include <cstdint>

namespace efl {

// ChaCha20 keystream (RFC 8439 layout: 256-bit key, 96-bit nonce, 32-bit
// block counter).
class ChaCha20 {
public:
    ChaCha20(const uint8_t key[32], const uint8_t nonce[12], uint32_t counter);

    // XORs the keystream into buf. Successive calls continue the stream.
    void xor_stream(uint8_t* buf, size_t len);

    // Emits raw keystream bytes.
    void keystream(uint8_t* out, size_t len);

private:
    void refill();

    uint32_t state_[16];
    uint8_t block_[64];
    size_t block_used_ = 64;
};

}  // namespace efl
