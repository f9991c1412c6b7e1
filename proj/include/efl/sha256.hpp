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
#include <span>

#include "efl/common.hpp"

namespace efl {

// FIPS 180-4 SHA-256. Self-contained; no external crypto dependency exists
// in this build, so the primitive lives here and is pinned by the standard
// test vectors in the crypto test suite.
class Sha256 {
public:
    static constexpr size_t kDigestSize = 32;

    Sha256();
    void update(const void* data, size_t len);
    void update(std::span<const uint8_t> data) { update(data.data(), data.size()); }
    Digest finish();

    static Digest digest(std::span<const uint8_t> data);
    static Digest digest(const void* data, size_t len);

private:
    void compress(const uint8_t block[64]);

    uint32_t h_[8];
    uint64_t total_len_ = 0;
    uint8_t buf_[64];
    size_t buf_used_ = 0;
};

Digest hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> msg);

// HKDF (extract-then-expand) over HMAC-SHA256.
Bytes hkdf_sha256(std::span<const uint8_t> ikm, std::span<const uint8_t> salt,
                  std::span<const uint8_t> info, size_t out_len);

}  // namespace efl
