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

#include "efl/aead.hpp"

#include <cstring>

#include "efl/chacha20.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

Digest compute_tag(const uint8_t mac_key[32], std::span<const uint8_t> aad,
                   std::span<const uint8_t> ciphertext) {
    uint8_t lens[16];
    uint64_t alen = aad.size(), clen = ciphertext.size();
    for (int i = 0; i < 8; ++i) {
        lens[i] = uint8_t(alen >> (8 * i));
        lens[8 + i] = uint8_t(clen >> (8 * i));
    }
    Sha256 body;
    body.update(lens, sizeof(lens));
    body.update(aad);
    body.update(ciphertext);
    Digest bd = body.finish();
    return hmac_sha256(std::span<const uint8_t>(mac_key, 32),
                       std::span<const uint8_t>(bd.data(), bd.size()));
}

bool tag_equal(const uint8_t* a, const uint8_t* b) {
    uint8_t diff = 0;
    for (size_t i = 0; i < kAeadTagSize; ++i) diff |= uint8_t(a[i] ^ b[i]);
    return diff == 0;
}

}  // namespace

Bytes aead_seal(const std::array<uint8_t, kAeadKeySize>& key,
                const std::array<uint8_t, kAeadNonceSize>& nonce,
                std::span<const uint8_t> aad, std::span<const uint8_t> plaintext) {
    uint8_t mac_key[32];
    ChaCha20 block0(key.data(), nonce.data(), 0);
    block0.keystream(mac_key, sizeof(mac_key));

    Bytes out(plaintext.size() + kAeadTagSize);
    std::memcpy(out.data(), plaintext.data(), plaintext.size());
    ChaCha20 stream(key.data(), nonce.data(), 1);
    stream.xor_stream(out.data(), plaintext.size());

    Digest tag = compute_tag(mac_key, aad,
                             std::span<const uint8_t>(out.data(), plaintext.size()));
    std::memcpy(out.data() + plaintext.size(), tag.data(), kAeadTagSize);
    return out;
}

std::optional<Bytes> aead_open(const std::array<uint8_t, kAeadKeySize>& key,
                               const std::array<uint8_t, kAeadNonceSize>& nonce,
                               std::span<const uint8_t> aad,
                               std::span<const uint8_t> sealed) {
    if (sealed.size() < kAeadTagSize) return std::nullopt;
    size_t clen = sealed.size() - kAeadTagSize;

    uint8_t mac_key[32];
    ChaCha20 block0(key.data(), nonce.data(), 0);
    block0.keystream(mac_key, sizeof(mac_key));

    Digest expect = compute_tag(mac_key, aad, sealed.first(clen));
    if (!tag_equal(expect.data(), sealed.data() + clen)) return std::nullopt;

    Bytes plain(sealed.begin(), sealed.begin() + clen);
    ChaCha20 stream(key.data(), nonce.data(), 1);
    stream.xor_stream(plain.data(), plain.size());
    return plain;
}

}  // namespace efl
