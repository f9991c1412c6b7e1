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

#include "efl/attest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "efl/bytes.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

// signed statement = domain tag || measurement || report_data
Bytes quote_statement(const Measurement& m, std::span<const uint8_t> report_data) {
    Bytes msg;
    const char* tag = "efl.quote.v1";
    msg.insert(msg.end(), tag, tag + std::strlen(tag));
    msg.insert(msg.end(), m.digest.begin(), m.digest.end());
    msg.insert(msg.end(), report_data.begin(), report_data.end());
    return msg;
}

}  // namespace

const char* quote_verdict_name(QuoteVerdict v) {
    switch (v) {
        case QuoteVerdict::Accept: return "accept";
        case QuoteVerdict::BadSignature: return "bad signature";
        case QuoteVerdict::MeasurementMismatch: return "measurement not in policy";
        case QuoteVerdict::ReportDataMismatch: return "report data mismatch";
    }
    return "unknown";
}

std::array<uint8_t, Quote::kEncodedSize> Quote::encode() const {
    std::array<uint8_t, kEncodedSize> out;
    std::memcpy(out.data(), measurement.digest.data(), 32);
    std::memcpy(out.data() + 32, report_data.data(), 32);
    std::memcpy(out.data() + 64, signature.data(), 64);
    return out;
}

Quote Quote::decode(std::span<const uint8_t> data) {
    if (data.size() != kEncodedSize)
        throw EncodingError("quote must be exactly " + std::to_string(kEncodedSize) +
                            " bytes, got " + std::to_string(data.size()));
    Quote q;
    std::memcpy(q.measurement.digest.data(), data.data(), 32);
    std::memcpy(q.report_data.data(), data.data() + 32, 32);
    std::memcpy(q.signature.data(), data.data() + 64, 64);
    return q;
}

Measurement measure(std::span<const uint8_t> build_id,
                    std::span<const uint8_t> config_bytes) {
    ByteWriter w;
    w.u32(uint32_t(build_id.size()));
    w.raw(build_id);
    w.raw(config_bytes);
    return Measurement{Sha256::digest(w.view())};
}

Measurement measure(const std::string& build_id, std::span<const uint8_t> config_bytes) {
    return measure(std::span<const uint8_t>(
                       reinterpret_cast<const uint8_t*>(build_id.data()), build_id.size()),
                   config_bytes);
}

Quote gen_quote(const ecc::SigningKey& authority, const Measurement& measurement,
                std::span<const uint8_t> report_data) {
    if (report_data.size() != 32)
        throw EncodingError("report_data must be 32 bytes, got " +
                            std::to_string(report_data.size()));
    Quote q;
    q.measurement = measurement;
    std::copy(report_data.begin(), report_data.end(), q.report_data.begin());
    q.signature = ecc::sign(authority, quote_statement(measurement, report_data));
    return q;
}

QuoteVerdict verify_quote(const VerifyPolicy& policy, const Quote& quote,
                          std::span<const uint8_t> expected_report_data) {
    Bytes stmt = quote_statement(quote.measurement, quote.report_data);
    if (!ecc::verify(policy.authority_public_key, stmt, quote.signature))
        return QuoteVerdict::BadSignature;

    bool listed = std::any_of(policy.allowed_measurements.begin(),
                              policy.allowed_measurements.end(),
                              [&](const Digest& d) { return d == quote.measurement.digest; });
    if (!listed) return QuoteVerdict::MeasurementMismatch;

    if (expected_report_data.size() != quote.report_data.size() ||
        !std::equal(expected_report_data.begin(), expected_report_data.end(),
                    quote.report_data.begin()))
        return QuoteVerdict::ReportDataMismatch;

    return QuoteVerdict::Accept;
}

ecc::SigningKey authority_from_seed(std::span<const uint8_t> seed) {
    return ecc::signing_key_from_seed(seed);
}

ecc::SigningKey load_authority_key(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open authority key file: " + path);
    std::string hex;
    f >> hex;
    Bytes seed = from_hex(hex);
    if (seed.size() != 32)
        throw FormatError("authority key file must hold 64 hex characters", hex.size());
    return authority_from_seed(seed);
}

}  // namespace efl
