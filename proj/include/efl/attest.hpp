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
#include <span>
#include <string>
#include <vector>

#include "efl/common.hpp"
#include "efl/edwards25519.hpp"

namespace efl {

// Simulated enclave attestation. A locally provisioned signing authority
// stands in for the hardware root of trust: it signs quotes that bind a
// node's measurement (build id + canonical config digest) to the node's
// handshake key. Verifiers hold the authority public key plus an allowlist
// of measurements. Secrets live in process memory only; nothing here has a
// persistence path.

struct Measurement {
    Digest digest{};
    bool operator==(const Measurement&) const = default;
};

struct Quote {
    Measurement measurement;
    std::array<uint8_t, 32> report_data{};  // hash of the handshake public key
    ecc::Sig64 signature{};                 // authority signature

    static constexpr size_t kEncodedSize = 32 + 32 + 64;
    std::array<uint8_t, kEncodedSize> encode() const;
    static Quote decode(std::span<const uint8_t> data);  // EncodingError on size
};

struct VerifyPolicy {
    ecc::Key32 authority_public_key{};
    std::vector<Digest> allowed_measurements;
};

enum class QuoteVerdict : uint8_t {
    Accept,
    BadSignature,         // forged or damaged quote
    MeasurementMismatch,  // authentic quote from an unapproved binary/config
    ReportDataMismatch,   // authentic quote bound to a different key
};

const char* quote_verdict_name(QuoteVerdict v);

// digest over (length-prefixed build id || config bytes); pure and total
Measurement measure(std::span<const uint8_t> build_id,
                    std::span<const uint8_t> config_bytes);
Measurement measure(const std::string& build_id, std::span<const uint8_t> config_bytes);

// EncodingError unless report_data is exactly 32 bytes.
Quote gen_quote(const ecc::SigningKey& authority, const Measurement& measurement,
                std::span<const uint8_t> report_data);

// Checks run in a fixed order - signature, measurement allowlist, report
// data - so a given bad quote always yields the same verdict.
QuoteVerdict verify_quote(const VerifyPolicy& policy, const Quote& quote,
                          std::span<const uint8_t> expected_report_data);

ecc::SigningKey authority_from_seed(std::span<const uint8_t> seed);

// Key files hold 64 hex characters (the 32-byte authority seed).
ecc::SigningKey load_authority_key(const std::string& path);

}  // namespace efl
