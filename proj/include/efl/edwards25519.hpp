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
#include <cstdint>
#include <optional>
#include <span>

#include "efl/common.hpp"

namespace efl::ecc {

// Schnorr signatures and Diffie-Hellman over the edwards25519 group, with a
// SHA-256 challenge/KDF. Wire-compatible with nothing on purpose: this build
// defines its own quote and handshake formats, so the scheme only has to be
// self-consistent, asymmetric, and hard to forge. Signatures are 64 bytes
// (compressed nonce point || scalar), public keys 32 bytes (compressed
// point), deterministic nonces. No side-channel hardening; variable-time
// arithmetic throughout.

using Key32 = std::array<uint8_t, 32>;
using Sig64 = std::array<uint8_t, 64>;

struct SigningKey {
    Key32 scalar;     // secret: reduced mod group order, nonzero
    Key32 nonce_key;  // secret: deterministic-nonce derivation key
    Key32 public_key; // scalar * basepoint, compressed
};

// Deterministic key derivation; the same seed always yields the same keypair.
SigningKey signing_key_from_seed(std::span<const uint8_t> seed);

Sig64 sign(const SigningKey& key, std::span<const uint8_t> msg);
bool verify(const Key32& public_key, std::span<const uint8_t> msg, const Sig64& sig);

struct DhKeyPair {
    Key32 secret;
    Key32 public_key;
};

DhKeyPair dh_keypair_from_seed(std::span<const uint8_t> seed);
DhKeyPair dh_keypair_random();

// Returns nullopt when the peer point does not decode, has low order, or the
// product degenerates. Both sides of an honest exchange derive equal secrets.
std::optional<Key32> dh_shared(const Key32& secret, const Key32& peer_public);

// scalar * basepoint, compressed. Exposed so tests can cross-check the group
// arithmetic against an independent implementation.
Key32 scalar_mult_base(const Key32& scalar);

// 32 bytes from the OS entropy pool.
Key32 random_key32();

}  // namespace efl::ecc
