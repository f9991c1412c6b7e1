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
#include <optional>
#include <span>

#include "efl/common.hpp"

namespace efl {

// Encrypt-then-MAC AEAD: ChaCha20 for confidentiality, HMAC-SHA256 over
// (lengths || aad || ciphertext) for integrity. The MAC key is drawn from
// keystream block zero, so every (key, nonce) pair gets a fresh one. Tag is
// a full 32 bytes; frames are big relative to that, no point truncating.
inline constexpr size_t kAeadTagSize = 32;
inline constexpr size_t kAeadKeySize = 32;
inline constexpr size_t kAeadNonceSize = 12;

// Returns ciphertext || tag (plaintext.size() + kAeadTagSize bytes).
Bytes aead_seal(const std::array<uint8_t, kAeadKeySize>& key,
                const std::array<uint8_t, kAeadNonceSize>& nonce,
                std::span<const uint8_t> aad, std::span<const uint8_t> plaintext);

// Returns the plaintext, or nullopt when authentication fails.
std::optional<Bytes> aead_open(const std::array<uint8_t, kAeadKeySize>& key,
                               const std::array<uint8_t, kAeadNonceSize>& nonce,
                               std::span<const uint8_t> aad,
                               std::span<const uint8_t> sealed);

}  // namespace efl
