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

#include <cstring>

#include "efl/aead.hpp"
#include "efl/chacha20.hpp"
#include "efl/common.hpp"
#include "efl/edwards25519.hpp"
#include "efl/rng.hpp"
#include "efl/sha256.hpp"

using namespace efl;

namespace {

Bytes str_bytes(const char* s) {
    return Bytes(reinterpret_cast<const uint8_t*>(s),
                 reinterpret_cast<const uint8_t*>(s) + std::strlen(s));
}

}  // namespace

TEST_CASE("sha256 matches FIPS test vectors") {
    CHECK(to_hex(Sha256::digest(str_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(Sha256::digest(str_bytes(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(Sha256::digest(str_bytes(
              "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256 incremental chunks equal one-shot") {
    Bytes data(100000);
    Rng rng(11);
    for (auto& b : data) b = uint8_t(rng.next_u64());
    Digest one = Sha256::digest(data);
    Sha256 h;
    size_t pos = 0;
    size_t chunks[] = {1, 63, 64, 65, 1000, 1, 13};
    size_t ci = 0;
    while (pos < data.size()) {
        size_t n = std::min(chunks[ci++ % 7], data.size() - pos);
        h.update(data.data() + pos, n);
        pos += n;
    }
    CHECK(h.finish() == one);
}

TEST_CASE("hmac-sha256 matches RFC 4231 test case 1") {
    Bytes key(20, 0x0b);
    CHECK(to_hex(hmac_sha256(key, str_bytes("Hi There"))) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
}

TEST_CASE("hkdf produces stable stream and distinct labels") {
    Bytes ikm(32, 0x42), salt = str_bytes("salt");
    Bytes a = hkdf_sha256(ikm, salt, str_bytes("one"), 96);
    Bytes b = hkdf_sha256(ikm, salt, str_bytes("one"), 96);
    Bytes c = hkdf_sha256(ikm, salt, str_bytes("two"), 96);
    CHECK(a == b);
    CHECK(a != c);
    // prefix property: a longer expansion starts with the shorter one
    Bytes a32 = hkdf_sha256(ikm, salt, str_bytes("one"), 32);
    CHECK(std::equal(a32.begin(), a32.end(), a.begin()));
}

TEST_CASE("chacha20 keystream is deterministic and nonce-separated") {
    uint8_t key[32], n1[12] = {0}, n2[12] = {0};
    for (int i = 0; i < 32; ++i) key[i] = uint8_t(i);
    n2[0] = 1;
    uint8_t s1[256], s2[256], s3[256];
    ChaCha20(key, n1, 0).keystream(s1, sizeof(s1));
    ChaCha20(key, n1, 0).keystream(s2, sizeof(s2));
    ChaCha20(key, n2, 0).keystream(s3, sizeof(s3));
    CHECK(std::memcmp(s1, s2, sizeof(s1)) == 0);
    CHECK(std::memcmp(s1, s3, sizeof(s1)) != 0);

    // xor round-trip across block boundaries
    Bytes msg(150);
    Rng rng(3);
    for (auto& b : msg) b = uint8_t(rng.next_u64());
    Bytes enc = msg;
    ChaCha20(key, n1, 7).xor_stream(enc.data(), enc.size());
    CHECK(enc != msg);
    ChaCha20(key, n1, 7).xor_stream(enc.data(), enc.size());
    CHECK(enc == msg);
}

// ---------------------------------------------------------------------------
// Independent group-arithmetic oracle: schoolbook 512-bit integers and the
// affine twisted-Edwards addition law. Shares no representation or code with
// the production implementation; used to pin scalar multiplication.
// ---------------------------------------------------------------------------
namespace oracle {

using Big = std::array<uint32_t, 16>;  // little-endian, 512 bits

Big zero() { return Big{}; }

Big from_u32(uint32_t v) {
    Big r{};
    r[0] = v;
    return r;
}

int cmp(const Big& a, const Big& b) {
    for (int i = 15; i >= 0; --i) {
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    }
    return 0;
}

Big add(const Big& a, const Big& b) {
    Big r{};
    uint64_t carry = 0;
    for (int i = 0; i < 16; ++i) {
        uint64_t s = uint64_t(a[i]) + b[i] + carry;
        r[i] = uint32_t(s);
        carry = s >> 32;
    }
    return r;
}

Big sub(const Big& a, const Big& b) {  // requires a >= b
    Big r{};
    int64_t borrow = 0;
    for (int i = 0; i < 16; ++i) {
        int64_t s = int64_t(a[i]) - b[i] - borrow;
        borrow = s < 0 ? 1 : 0;
        r[i] = uint32_t(s + (borrow << 32));
    }
    return r;
}

Big shl1(const Big& a) {
    Big r{};
    uint32_t carry = 0;
    for (int i = 0; i < 16; ++i) {
        r[i] = (a[i] << 1) | carry;
        carry = a[i] >> 31;
    }
    return r;
}

Big mul(const Big& a, const Big& b) {  // low 8 limbs of each input only
    Big r{};
    for (int i = 0; i < 8; ++i) {
        uint64_t carry = 0;
        for (int j = 0; j < 8; ++j) {
            uint64_t cur = uint64_t(a[i]) * b[j] + r[i + j] + carry;
            r[i + j] = uint32_t(cur);
            carry = cur >> 32;
        }
        r[i + 8] = uint32_t(carry);
    }
    return r;
}

Big prime() {  // 2^255 - 19
    Big p{};
    p[7] = 0x80000000u;  // 2^255
    Big nineteen = from_u32(19);
    return sub(p, nineteen);
}

Big mod_p(Big a) {
    Big p = prime();
    // binary long division: subtract shifted copies of p
    Big shifted[258];
    shifted[0] = p;
    int max_shift = 512 - 255;
    for (int i = 1; i <= max_shift; ++i) shifted[i] = shl1(shifted[i - 1]);
    for (int i = max_shift; i >= 0; --i) {
        if (cmp(a, shifted[i]) >= 0) a = sub(a, shifted[i]);
    }
    return a;
}

Big mod_mul(const Big& a, const Big& b) { return mod_p(mul(a, b)); }
Big mod_add(const Big& a, const Big& b) { return mod_p(add(a, b)); }
Big mod_sub(const Big& a, const Big& b) { return mod_p(sub(add(a, prime()), b)); }

Big mod_pow(Big base, const Big& e) {
    Big r = from_u32(1);
    for (int bit = 255; bit >= 0; --bit) {
        r = mod_mul(r, r);
        if ((e[bit / 32] >> (bit % 32)) & 1) r = mod_mul(r, base);
    }
    return r;
}

Big mod_inv(const Big& a) { return mod_pow(a, sub(prime(), from_u32(2))); }

Big from_bytes32(const uint8_t* b) {
    Big r{};
    for (int i = 0; i < 32; ++i) r[i / 4] |= uint32_t(b[i]) << (8 * (i % 4));
    return r;
}

void to_bytes32(uint8_t* out, const Big& a) {
    for (int i = 0; i < 32; ++i) out[i] = uint8_t(a[i / 4] >> (8 * (i % 4)));
}

struct Pt {
    Big x, y;
};

Big curve_d() {
    return mod_mul(mod_sub(zero(), from_u32(121665)), mod_inv(from_u32(121666)));
}

// unified affine addition on -x^2 + y^2 = 1 + d x^2 y^2
Pt pt_add(const Pt& p, const Pt& q, const Big& d) {
    Big xy = mod_mul(p.x, q.y), yx = mod_mul(p.y, q.x);
    Big yy = mod_mul(p.y, q.y), xx = mod_mul(p.x, q.x);
    Big dxyxy = mod_mul(d, mod_mul(xx, yy));
    Big one = from_u32(1);
    Pt r;
    r.x = mod_mul(mod_add(xy, yx), mod_inv(mod_add(one, dxyxy)));
    r.y = mod_mul(mod_add(yy, xx), mod_inv(mod_sub(one, dxyxy)));
    return r;
}

Big sqrt_mod_p(const Big& a, bool& ok) {
    // (p+3)/8 = 2^252 - 2
    Big e{};
    e[7] = 0x10000000u;  // 2^252
    e = sub(e, from_u32(2));
    Big r = mod_pow(a, e);
    if (cmp(mod_mul(r, r), mod_p(a)) != 0) {
        // multiply by sqrt(-1) = 2^((p-1)/4)
        Big e2{};
        e2[7] = 0x20000000u;  // 2^253
        e2 = sub(e2, from_u32(5));
        Big sm1 = mod_pow(from_u32(2), e2);
        r = mod_mul(r, sm1);
    }
    ok = cmp(mod_mul(r, r), mod_p(a)) == 0;
    return r;
}

Pt base_point(const Big& d) {
    Pt b;
    b.y = mod_mul(from_u32(4), mod_inv(from_u32(5)));
    Big y2 = mod_mul(b.y, b.y);
    Big u = mod_sub(y2, from_u32(1));
    Big v = mod_add(mod_mul(d, y2), from_u32(1));
    bool ok = false;
    b.x = sqrt_mod_p(mod_mul(u, mod_inv(v)), ok);
    REQUIRE(ok);
    uint8_t xb[32];
    to_bytes32(xb, b.x);
    if (xb[0] & 1) b.x = mod_sub(zero(), b.x);  // pick the even root
    return b;
}

std::array<uint8_t, 32> compress(const Pt& p) {
    std::array<uint8_t, 32> out{};
    to_bytes32(out.data(), p.y);
    uint8_t xb[32];
    to_bytes32(xb, p.x);
    out[31] |= uint8_t((xb[0] & 1) << 7);
    return out;
}

std::array<uint8_t, 32> scalar_mult_base(const uint8_t scalar[32]) {
    Big d = curve_d();
    Pt b = base_point(d);
    Pt r{zero(), from_u32(1)};  // identity
    for (int bit = 255; bit >= 0; --bit) {
        r = pt_add(r, r, d);
        if ((scalar[bit >> 3] >> (bit & 7)) & 1) r = pt_add(r, b, d);
    }
    return compress(r);
}

}  // namespace oracle

TEST_CASE("base point compresses to the conventional encoding") {
    ecc::Key32 one{};
    one[0] = 1;
    ecc::Key32 b = ecc::scalar_mult_base(one);
    CHECK(b[0] == 0x58);
    for (int i = 1; i < 32; ++i) CHECK(b[i] == 0x66);
}

TEST_CASE("group order times base point is the identity") {
    // L = 2^252 + 27742317777372353535851937790883648493
    ecc::Key32 l = {0xed, 0xd3, 0xf5, 0x5c, 0x1a, 0x63, 0x12, 0x58, 0xd6, 0x9c, 0xf7,
                    0xa2, 0xde, 0xf9, 0xde, 0x14, 0,    0,    0,    0,    0,    0,
                    0,    0,    0,    0,    0,    0,    0,    0,    0,    0x10};
    ecc::Key32 r = ecc::scalar_mult_base(l);
    CHECK(r[0] == 0x01);  // identity is (0, 1); encodes as y=1, sign 0
    for (int i = 1; i < 32; ++i) CHECK(r[i] == 0);
}

TEST_CASE("scalar multiplication agrees with the independent oracle") {
    Rng rng(0xec5);
    for (int trial = 0; trial < 12; ++trial) {
        ecc::Key32 k;
        for (auto& b : k) b = uint8_t(rng.next_u64());
        if (trial == 0) k.fill(0);  // 0 * B = identity edge case
        auto got = ecc::scalar_mult_base(k);
        auto want = oracle::scalar_mult_base(k.data());
        CHECK(std::memcmp(got.data(), want.data(), 32) == 0);
    }
}

TEST_CASE("dh key agreement is symmetric") {
    Rng rng(7);
    for (int trial = 0; trial < 6; ++trial) {
        std::array<uint8_t, 32> seed_a{}, seed_b{};
        for (auto& b : seed_a) b = uint8_t(rng.next_u64());
        for (auto& b : seed_b) b = uint8_t(rng.next_u64());
        auto a = ecc::dh_keypair_from_seed(seed_a);
        auto b = ecc::dh_keypair_from_seed(seed_b);
        auto s1 = ecc::dh_shared(a.secret, b.public_key);
        auto s2 = ecc::dh_shared(b.secret, a.public_key);
        REQUIRE(s1.has_value());
        REQUIRE(s2.has_value());
        CHECK(*s1 == *s2);
        // different peers give different secrets
        auto c = ecc::dh_keypair_from_seed(std::array<uint8_t, 32>{1, 2, 3});
        auto s3 = ecc::dh_shared(a.secret, c.public_key);
        REQUIRE(s3.has_value());
        CHECK(*s1 != *s3);
    }
}

TEST_CASE("dh rejects garbage and low-order peers") {
    auto kp = ecc::dh_keypair_from_seed(std::array<uint8_t, 32>{9});
    ecc::Key32 identity{};
    identity[0] = 1;  // the identity point: order 1
    CHECK(!ecc::dh_shared(kp.secret, identity).has_value());

    // non-canonical encoding (y = p) must be rejected outright
    ecc::Key32 noncanon;
    noncanon.fill(0xff);
    noncanon[0] = 0xed;
    noncanon[31] = 0x7f;
    CHECK(!ecc::dh_shared(kp.secret, noncanon).has_value());

    // roughly half of all y values are off-curve; at least one small y is
    int rejected = 0;
    for (uint8_t y = 2; y < 40; ++y) {
        ecc::Key32 cand{};
        cand[0] = y;
        if (!ecc::dh_shared(kp.secret, cand).has_value()) ++rejected;
    }
    CHECK(rejected > 0);
}

TEST_CASE("signatures verify and reject mutations") {
    Rng rng(0x51973);
    auto key = ecc::signing_key_from_seed(std::array<uint8_t, 32>{5, 6, 7});
    Bytes msg = str_bytes("quote binding payload");
    auto sig = ecc::sign(key, msg);
    CHECK(ecc::verify(key.public_key, msg, sig));

    // deterministic: same message, same signature
    CHECK(ecc::sign(key, msg) == sig);

    // different message fails
    CHECK(!ecc::verify(key.public_key, str_bytes("quote binding payloaD"), sig));

    // different key fails
    auto other = ecc::signing_key_from_seed(std::array<uint8_t, 32>{8});
    CHECK(!ecc::verify(other.public_key, msg, sig));

    // single-bit mutations fail (the full 10k sweep lives in the acceptance suite)
    for (int trial = 0; trial < 64; ++trial) {
        auto bad = sig;
        size_t bit = rng.next_below(64 * 8);
        bad[bit / 8] ^= uint8_t(1u << (bit % 8));
        CHECK(!ecc::verify(key.public_key, msg, bad));
    }
}

TEST_CASE("signing keys are deterministic in the seed") {
    auto a = ecc::signing_key_from_seed(std::array<uint8_t, 32>{1});
    auto b = ecc::signing_key_from_seed(std::array<uint8_t, 32>{1});
    auto c = ecc::signing_key_from_seed(std::array<uint8_t, 32>{2});
    CHECK(a.public_key == b.public_key);
    CHECK(a.scalar == b.scalar);
    CHECK(a.public_key != c.public_key);
}

TEST_CASE("aead round-trips and authenticates") {
    std::array<uint8_t, 32> key{};
    std::array<uint8_t, 12> nonce{};
    key[0] = 1;
    nonce[0] = 9;
    Bytes aad = str_bytes("hdr");
    Rng rng(21);

    for (size_t len : {size_t(0), size_t(1), size_t(64), size_t(1000)}) {
        Bytes pt(len);
        for (auto& b : pt) b = uint8_t(rng.next_u64());
        Bytes sealed = aead_seal(key, nonce, aad, pt);
        CHECK(sealed.size() == len + kAeadTagSize);
        auto opened = aead_open(key, nonce, aad, sealed);
        REQUIRE(opened.has_value());
        CHECK(*opened == pt);

        // every single-bit flip is caught
        for (int trial = 0; trial < 32; ++trial) {
            Bytes bad = sealed;
            size_t bit = rng.next_below(bad.size() * 8);
            bad[bit / 8] ^= uint8_t(1u << (bit % 8));
            CHECK(!aead_open(key, nonce, aad, bad).has_value());
        }
    }

    // aad and nonce are bound
    Bytes sealed = aead_seal(key, nonce, aad, str_bytes("payload"));
    CHECK(!aead_open(key, nonce, str_bytes("hdR"), sealed).has_value());
    auto nonce2 = nonce;
    nonce2[11] ^= 1;
    CHECK(!aead_open(key, nonce2, aad, sealed).has_value());
    // truncated to below tag size
    Bytes tiny(sealed.begin(), sealed.begin() + 8);
    CHECK(!aead_open(key, nonce, aad, tiny).has_value());
}
