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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "efl/attest.hpp"
#include "efl/rng.hpp"
#include "efl/sha256.hpp"

using namespace efl;

namespace {

Bytes sb(const char* s) {
    return Bytes(reinterpret_cast<const uint8_t*>(s),
                 reinterpret_cast<const uint8_t*>(s) + strlen(s));
}

struct Fixture {
    ecc::SigningKey authority = authority_from_seed(std::array<uint8_t, 32>{1, 1});
    Measurement meas = measure(std::string("build-a"), sb("cfg"));
    std::array<uint8_t, 32> report = Sha256::digest(sb("handshake-pubkey"));
    VerifyPolicy policy{authority.public_key, {meas.digest}};
    Quote quote = gen_quote(authority, meas, report);
};

}  // namespace

TEST_CASE("measure is deterministic and input-sensitive") {
    Measurement a = measure(std::string("build"), sb("cfg"));
    Measurement b = measure(std::string("build"), sb("cfg"));
    CHECK(a == b);
    CHECK(measure(std::string("build"), sb("cfG")).digest != a.digest);
    CHECK(measure(std::string("build2"), sb("cfg")).digest != a.digest);
    // length prefix keeps (id, cfg) boundaries unambiguous
    CHECK(measure(std::string("bui"), sb("ldcfg")).digest != a.digest);
    // total on empty input
    Measurement e = measure(std::string(""), {});
    CHECK(e == measure(std::string(""), {}));
}

TEST_CASE("quote round-trips through the canonical encoding") {
    Fixture f;
    auto enc = f.quote.encode();
    CHECK(enc.size() == 128);
    Quote back = Quote::decode(enc);
    CHECK(back.measurement == f.quote.measurement);
    CHECK(back.report_data == f.quote.report_data);
    CHECK(back.signature == f.quote.signature);
    Bytes padded(enc.begin(), enc.end());
    padded.push_back(0);
    CHECK_THROWS_AS(Quote::decode(padded), EncodingError);
}

TEST_CASE("gen_quote enforces the report size") {
    Fixture f;
    CHECK_THROWS_AS(gen_quote(f.authority, f.meas, sb("short")), EncodingError);
    CHECK_NOTHROW(gen_quote(f.authority, f.meas, f.report));
}

TEST_CASE("honest quote verifies; each failure mode is distinguishable") {
    Fixture f;
    CHECK(verify_quote(f.policy, f.quote, f.report) == QuoteVerdict::Accept);

    SUBCASE("flipped signature bit") {
        Quote bad = f.quote;
        bad.signature[5] ^= 0x20;
        CHECK(verify_quote(f.policy, bad, f.report) == QuoteVerdict::BadSignature);
    }
    SUBCASE("wrong authority") {
        auto other = authority_from_seed(std::array<uint8_t, 32>{2, 2});
        VerifyPolicy p2{other.public_key, {f.meas.digest}};
        CHECK(verify_quote(p2, f.quote, f.report) == QuoteVerdict::BadSignature);
    }
    SUBCASE("valid signature but unlisted measurement") {
        Measurement m2 = measure(std::string("build-b"), sb("cfg"));
        Quote q2 = gen_quote(f.authority, m2, f.report);
        CHECK(verify_quote(f.policy, q2, f.report) == QuoteVerdict::MeasurementMismatch);
    }
    SUBCASE("key substitution: quote bound to another key") {
        auto other_report = Sha256::digest(sb("attacker-pubkey"));
        Quote q3 = gen_quote(f.authority, f.meas, other_report);
        CHECK(verify_quote(f.policy, q3, f.report) == QuoteVerdict::ReportDataMismatch);
    }
}

TEST_CASE("two quotes for the same inputs both verify") {
    Fixture f;
    Quote a = gen_quote(f.authority, f.meas, f.report);
    Quote b = gen_quote(f.authority, f.meas, f.report);
    CHECK(verify_quote(f.policy, a, f.report) == QuoteVerdict::Accept);
    CHECK(verify_quote(f.policy, b, f.report) == QuoteVerdict::Accept);
}

TEST_CASE("verification is pure") {
    Fixture f;
    for (int i = 0; i < 5; ++i)
        CHECK(verify_quote(f.policy, f.quote, f.report) == QuoteVerdict::Accept);
}

TEST_CASE("random signature mutations are rejected") {
    // the 10k sweep runs in the acceptance suite; sample here
    Fixture f;
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        Quote bad = f.quote;
        size_t bit = rng.next_below(64 * 8);
        bad.signature[bit / 8] ^= uint8_t(1u << (bit % 8));
        CHECK(verify_quote(f.policy, bad, f.report) == QuoteVerdict::BadSignature);
    }
}

TEST_CASE("authority keys load from hex files") {
    auto path = std::string("/tmp/efl_authority_test.key");
    {
        std::ofstream out(path);
        out << "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f\n";
    }
    auto key = load_authority_key(path);
    Bytes seed(32);
    for (int i = 0; i < 32; ++i) seed[i] = uint8_t(i);
    CHECK(key.public_key == authority_from_seed(seed).public_key);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_authority_key("/tmp/definitely_missing_efl.key"), IoError);
}
