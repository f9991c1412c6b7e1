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

#include "efl/edwards25519.hpp"

#include <sys/random.h>

#include <cstring>

#include "efl/sha256.hpp"

namespace efl::ecc {

namespace {

using u64 = uint64_t;
using u128 = unsigned __int128;

// ---------------------------------------------------------------------------
// Field arithmetic mod p = 2^255 - 19, radix 2^51, five limbs.
// Invariant: after every public fe_* operation limbs are < 2^52 (one carry
// pass), which leaves enough headroom for the 128-bit accumulators in fe_mul.
// ---------------------------------------------------------------------------

constexpr u64 kMask51 = (1ULL << 51) - 1;

struct Fe {
    u64 v[5];
};

constexpr Fe kFeZero{{0, 0, 0, 0, 0}};
constexpr Fe kFeOne{{1, 0, 0, 0, 0}};

// 2p per limb, used to keep subtraction non-negative.
constexpr u64 kTwoP0 = 0x0fffffffffffda;  // 2*(2^51 - 19)
constexpr u64 kTwoPRest = 0x0ffffffffffffe;  // 2*(2^51 - 1)

void fe_carry(Fe& a) {
    for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < 4; ++i) {
            u64 c = a.v[i] >> 51;
            a.v[i] &= kMask51;
            a.v[i + 1] += c;
        }
        u64 c = a.v[4] >> 51;
        a.v[4] &= kMask51;
        a.v[0] += 19 * c;
    }
}

Fe fe_add(const Fe& a, const Fe& b) {
    Fe r;
    for (int i = 0; i < 5; ++i) r.v[i] = a.v[i] + b.v[i];
    fe_carry(r);
    return r;
}

Fe fe_sub(const Fe& a, const Fe& b) {
    Fe r;
    r.v[0] = a.v[0] + kTwoP0 - b.v[0];
    for (int i = 1; i < 5; ++i) r.v[i] = a.v[i] + kTwoPRest - b.v[i];
    fe_carry(r);
    return r;
}

Fe fe_neg(const Fe& a) { return fe_sub(kFeZero, a); }

Fe fe_mul(const Fe& a, const Fe& b) {
    const u64 a0 = a.v[0], a1 = a.v[1], a2 = a.v[2], a3 = a.v[3], a4 = a.v[4];
    const u64 b0 = b.v[0], b1 = b.v[1], b2 = b.v[2], b3 = b.v[3], b4 = b.v[4];

    u128 t0 = (u128)a0 * b0 +
              (u128)19 * ((u128)a1 * b4 + (u128)a2 * b3 + (u128)a3 * b2 + (u128)a4 * b1);
    u128 t1 = (u128)a0 * b1 + (u128)a1 * b0 +
              (u128)19 * ((u128)a2 * b4 + (u128)a3 * b3 + (u128)a4 * b2);
    u128 t2 = (u128)a0 * b2 + (u128)a1 * b1 + (u128)a2 * b0 +
              (u128)19 * ((u128)a3 * b4 + (u128)a4 * b3);
    u128 t3 = (u128)a0 * b3 + (u128)a1 * b2 + (u128)a2 * b1 + (u128)a3 * b0 +
              (u128)19 * ((u128)a4 * b4);
    u128 t4 = (u128)a0 * b4 + (u128)a1 * b3 + (u128)a2 * b2 + (u128)a3 * b1 + (u128)a4 * b0;

    Fe r;
    u128 c;
    c = t0 >> 51; t1 += c; r.v[0] = (u64)t0 & kMask51;
    c = t1 >> 51; t2 += c; r.v[1] = (u64)t1 & kMask51;
    c = t2 >> 51; t3 += c; r.v[2] = (u64)t2 & kMask51;
    c = t3 >> 51; t4 += c; r.v[3] = (u64)t3 & kMask51;
    c = t4 >> 51; r.v[4] = (u64)t4 & kMask51;
    r.v[0] += (u64)c * 19;
    u64 c2 = r.v[0] >> 51;
    r.v[0] &= kMask51;
    r.v[1] += c2;
    return r;
}

Fe fe_sq(const Fe& a) { return fe_mul(a, a); }

Fe fe_from_u64(u64 x) {
    Fe r = kFeZero;
    r.v[0] = x & kMask51;
    r.v[1] = x >> 51;
    return r;
}

// Little-endian, bit 255 ignored.
Fe fe_frombytes(const uint8_t b[32]) {
    u64 w[4];
    for (int i = 0; i < 4; ++i) {
        w[i] = 0;
        for (int j = 0; j < 8; ++j) w[i] |= (u64)b[8 * i + j] << (8 * j);
    }
    Fe r;
    r.v[0] = w[0] & kMask51;
    r.v[1] = ((w[0] >> 51) | (w[1] << 13)) & kMask51;
    r.v[2] = ((w[1] >> 38) | (w[2] << 26)) & kMask51;
    r.v[3] = ((w[2] >> 25) | (w[3] << 39)) & kMask51;
    r.v[4] = (w[3] >> 12) & kMask51;
    return r;
}

void fe_tobytes(uint8_t out[32], const Fe& a) {
    Fe t = a;
    fe_carry(t);
    fe_carry(t);  // tighten: limbs strictly < 2^51 now

    // canonical reduction: if value >= p then (value + 19) has bit 255 set
    Fe u = t;
    u.v[0] += 19;
    for (int i = 0; i < 4; ++i) {
        u64 c = u.v[i] >> 51;
        u.v[i] &= kMask51;
        u.v[i + 1] += c;
    }
    if (u.v[4] >> 51) {
        u.v[4] &= kMask51;  // subtract 2^255: result is value - p
        t = u;
    }

    u64 w0 = t.v[0] | (t.v[1] << 51);
    u64 w1 = (t.v[1] >> 13) | (t.v[2] << 38);
    u64 w2 = (t.v[2] >> 26) | (t.v[3] << 25);
    u64 w3 = (t.v[3] >> 39) | (t.v[4] << 12);
    u64 w[4] = {w0, w1, w2, w3};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 8; ++j) out[8 * i + j] = uint8_t(w[i] >> (8 * j));
}

bool fe_eq(const Fe& a, const Fe& b) {
    uint8_t ba[32], bb[32];
    fe_tobytes(ba, a);
    fe_tobytes(bb, b);
    return std::memcmp(ba, bb, 32) == 0;
}

bool fe_is_zero(const Fe& a) { return fe_eq(a, kFeZero); }

// Exponent supplied as 32 little-endian bytes; variable time.
Fe fe_pow(const Fe& a, const uint8_t exp[32]) {
    Fe r = kFeOne;
    for (int bit = 255; bit >= 0; --bit) {
        r = fe_sq(r);
        if ((exp[bit >> 3] >> (bit & 7)) & 1) r = fe_mul(r, a);
    }
    return r;
}

struct FeConstants {
    uint8_t exp_p_minus_2[32];   // 2^255 - 21
    uint8_t exp_sqrt[32];        // (p+3)/8 = 2^252 - 2
    uint8_t exp_sqrt_m1[32];     // (p-1)/4 = 2^253 - 5
    Fe d, d2, sqrt_m1;
};

const FeConstants& fe_constants() {
    static const FeConstants k = [] {
        FeConstants c{};
        // p - 2 = 2^255 - 21: 0xeb, 0xff * 30, 0x7f
        c.exp_p_minus_2[0] = 0xeb;
        for (int i = 1; i < 31; ++i) c.exp_p_minus_2[i] = 0xff;
        c.exp_p_minus_2[31] = 0x7f;
        // 2^252 - 2: 0xfe, 0xff * 30, 0x0f
        c.exp_sqrt[0] = 0xfe;
        for (int i = 1; i < 31; ++i) c.exp_sqrt[i] = 0xff;
        c.exp_sqrt[31] = 0x0f;
        // 2^253 - 5: 0xfb, 0xff * 30, 0x1f
        c.exp_sqrt_m1[0] = 0xfb;
        for (int i = 1; i < 31; ++i) c.exp_sqrt_m1[i] = 0xff;
        c.exp_sqrt_m1[31] = 0x1f;

        // d = -121665/121666, derived rather than hardcoded
        Fe n = fe_from_u64(121665);
        Fe m = fe_from_u64(121666);
        c.d = fe_mul(fe_neg(n), fe_pow(m, c.exp_p_minus_2));
        c.d2 = fe_add(c.d, c.d);
        c.sqrt_m1 = fe_pow(fe_from_u64(2), c.exp_sqrt_m1);
        return c;
    }();
    return k;
}

Fe fe_invert(const Fe& a) { return fe_pow(a, fe_constants().exp_p_minus_2); }

// ---------------------------------------------------------------------------
// Group: twisted Edwards -x^2 + y^2 = 1 + d x^2 y^2, extended coordinates
// (X:Y:Z:T), T = XY/Z. The addition below (hwcd-3 shape) is strongly unified,
// so it doubles as the doubling formula; throughput is irrelevant here.
// ---------------------------------------------------------------------------

struct Point {
    Fe X, Y, Z, T;
};

const Point kIdentity{kFeZero, kFeOne, kFeOne, kFeZero};

Point p_add(const Point& p, const Point& q) {
    const Fe& d2 = fe_constants().d2;
    Fe a = fe_mul(fe_sub(p.Y, p.X), fe_sub(q.Y, q.X));
    Fe b = fe_mul(fe_add(p.Y, p.X), fe_add(q.Y, q.X));
    Fe c = fe_mul(fe_mul(p.T, d2), q.T);
    Fe zz = fe_mul(p.Z, q.Z);
    Fe d = fe_add(zz, zz);
    Fe e = fe_sub(b, a);
    Fe f = fe_sub(d, c);
    Fe g = fe_add(d, c);
    Fe h = fe_add(b, a);
    Point r;
    r.X = fe_mul(e, f);
    r.Y = fe_mul(g, h);
    r.T = fe_mul(e, h);
    r.Z = fe_mul(f, g);
    return r;
}

// Scalar given as 32 little-endian bytes; plain double-and-add.
Point p_scalar_mult(const uint8_t scalar[32], const Point& p) {
    Point r = kIdentity;
    for (int bit = 255; bit >= 0; --bit) {
        r = p_add(r, r);
        if ((scalar[bit >> 3] >> (bit & 7)) & 1) r = p_add(r, p);
    }
    return r;
}

bool p_equal(const Point& p, const Point& q) {
    // cross-multiply to compare projective coordinates
    return fe_eq(fe_mul(p.X, q.Z), fe_mul(q.X, p.Z)) &&
           fe_eq(fe_mul(p.Y, q.Z), fe_mul(q.Y, p.Z));
}

bool p_is_identity(const Point& p) {
    return fe_is_zero(p.X) && fe_eq(p.Y, p.Z);
}

void p_compress(uint8_t out[32], const Point& p) {
    Fe zinv = fe_invert(p.Z);
    Fe x = fe_mul(p.X, zinv);
    Fe y = fe_mul(p.Y, zinv);
    fe_tobytes(out, y);
    uint8_t xb[32];
    fe_tobytes(xb, x);
    out[31] |= uint8_t((xb[0] & 1) << 7);
}

// Rejects non-canonical y encodings and points off the curve.
bool p_decompress(Point& out, const uint8_t in[32]) {
    const FeConstants& k = fe_constants();
    uint8_t yb[32];
    std::memcpy(yb, in, 32);
    int sign = yb[31] >> 7;
    yb[31] &= 0x7f;

    // canonical: y < p
    static const uint8_t kPBytes[32] = {
        0xed, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0x7f};
    for (int i = 31; i >= 0; --i) {
        if (yb[i] < kPBytes[i]) break;
        if (yb[i] > kPBytes[i]) return false;
        if (i == 0) return false;  // y == p
    }

    Fe y = fe_frombytes(yb);
    Fe y2 = fe_sq(y);
    Fe u = fe_sub(y2, kFeOne);            // y^2 - 1
    Fe v = fe_add(fe_mul(k.d, y2), kFeOne);  // d y^2 + 1
    Fe t = fe_mul(u, fe_invert(v));       // x^2
    Fe x = fe_pow(t, k.exp_sqrt);         // candidate root
    if (!fe_eq(fe_sq(x), t)) {
        x = fe_mul(x, k.sqrt_m1);
        if (!fe_eq(fe_sq(x), t)) return false;  // not a square: off curve
    }
    uint8_t xb[32];
    fe_tobytes(xb, x);
    if (fe_is_zero(x) && sign == 1) return false;  // -0 is not canonical
    if ((xb[0] & 1) != sign) x = fe_neg(x);

    out.X = x;
    out.Y = y;
    out.Z = kFeOne;
    out.T = fe_mul(x, y);
    return true;
}

const Point& base_point() {
    static const Point b = [] {
        // y = 4/5, x chosen even (the conventional generator)
        Fe y = fe_mul(fe_from_u64(4), fe_invert(fe_from_u64(5)));
        uint8_t yb[32];
        fe_tobytes(yb, y);
        Point p;
        bool ok = p_decompress(p, yb);
        (void)ok;  // 4/5 is a curve point; checked by the test suite
        return p;
    }();
    return b;
}

// ---------------------------------------------------------------------------
// Scalar arithmetic mod the group order
// L = 2^252 + 27742317777372353535851937790883648493.
// Plain schoolbook 512-bit integers; handshakes are rare, so shift-subtract
// reduction is plenty.
// ---------------------------------------------------------------------------

struct U512 {
    u64 w[8];
};

constexpr u64 kL[4] = {0x5812631a5cf5d3edULL, 0x14def9dea2f79cd6ULL, 0ULL,
                       0x1000000000000000ULL};

U512 u512_zero() { return U512{{0, 0, 0, 0, 0, 0, 0, 0}}; }

U512 u512_from_bytes(const uint8_t* b, size_t len) {
    U512 r = u512_zero();
    for (size_t i = 0; i < len && i < 64; ++i) r.w[i / 8] |= (u64)b[i] << (8 * (i % 8));
    return r;
}

int u512_cmp(const U512& a, const U512& b) {
    for (int i = 7; i >= 0; --i) {
        if (a.w[i] < b.w[i]) return -1;
        if (a.w[i] > b.w[i]) return 1;
    }
    return 0;
}

void u512_sub(U512& a, const U512& b) {
    u64 borrow = 0;
    for (int i = 0; i < 8; ++i) {
        u64 bi = b.w[i] + borrow;
        borrow = (bi < borrow) ? 1 : (a.w[i] < bi ? 1 : 0);
        a.w[i] -= bi;
    }
}

U512 u512_shl(const U512& a, int k) {
    U512 r = u512_zero();
    int word = k / 64, bit = k % 64;
    for (int i = 7; i >= 0; --i) {
        u64 lo = (i - word >= 0) ? a.w[i - word] : 0;
        u64 hi = (bit && i - word - 1 >= 0) ? a.w[i - word - 1] : 0;
        r.w[i] = (bit ? (lo << bit) | (hi >> (64 - bit)) : lo);
    }
    return r;
}

// value mod L, L fits 253 bits so the remainder fits four words
void u512_mod_l(U512& a) {
    U512 l = u512_zero();
    for (int i = 0; i < 4; ++i) l.w[i] = kL[i];
    for (int shift = 512 - 253; shift >= 0; --shift) {
        U512 m = u512_shl(l, shift);
        if (u512_cmp(a, m) >= 0) u512_sub(a, m);
    }
}

using Sc = std::array<u64, 4>;  // scalar < L

Sc sc_from_u512_mod_l(U512 v) {
    u512_mod_l(v);
    return Sc{v.w[0], v.w[1], v.w[2], v.w[3]};
}

Sc sc_from_bytes_mod_l(const uint8_t* b, size_t len) {
    return sc_from_u512_mod_l(u512_from_bytes(b, len));
}

void sc_to_bytes(uint8_t out[32], const Sc& s) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 8; ++j) out[8 * i + j] = uint8_t(s[i] >> (8 * j));
}

bool sc_is_zero(const Sc& s) { return (s[0] | s[1] | s[2] | s[3]) == 0; }

// strict: value < L
bool sc_bytes_canonical(const uint8_t b[32]) {
    U512 v = u512_from_bytes(b, 32);
    U512 l = u512_zero();
    for (int i = 0; i < 4; ++i) l.w[i] = kL[i];
    return u512_cmp(v, l) < 0;
}

Sc sc_mul_add(const Sc& a, const Sc& b, const Sc& c) {
    U512 t = u512_zero();
    for (int i = 0; i < 4; ++i) {
        u128 carry = 0;
        for (int j = 0; j < 4; ++j) {
            u128 cur = (u128)a[i] * b[j] + t.w[i + j] + carry;
            t.w[i + j] = (u64)cur;
            carry = cur >> 64;
        }
        t.w[i + 4] += (u64)carry;
    }
    u64 carry = 0;
    for (int i = 0; i < 4; ++i) {
        u128 cur = (u128)t.w[i] + c[i] + carry;
        t.w[i] = (u64)cur;
        carry = (u64)(cur >> 64);
    }
    for (int i = 4; i < 8 && carry; ++i) {
        u128 cur = (u128)t.w[i] + carry;
        t.w[i] = (u64)cur;
        carry = (u64)(cur >> 64);
    }
    return sc_from_u512_mod_l(t);
}

// ---------------------------------------------------------------------------
// Signatures and DH
// ---------------------------------------------------------------------------

Digest tagged_hash(const char* tag, std::span<const uint8_t> a,
                   std::span<const uint8_t> b = {}, std::span<const uint8_t> c = {}) {
    Sha256 h;
    h.update(tag, std::strlen(tag));
    h.update(a);
    h.update(b);
    h.update(c);
    return h.finish();
}

Sc challenge_scalar(const uint8_t r_enc[32], const Key32& pub,
                    std::span<const uint8_t> msg) {
    Digest d = tagged_hash("efl.sig.challenge.v1", std::span<const uint8_t>(r_enc, 32),
                           std::span<const uint8_t>(pub.data(), 32), msg);
    return sc_from_bytes_mod_l(d.data(), d.size());
}

Sc nonzero_scalar_from_hash(const Digest& d) {
    Sc s = sc_from_bytes_mod_l(d.data(), d.size());
    if (sc_is_zero(s)) s[0] = 1;
    return s;
}

Key32 compress_key(const Point& p) {
    Key32 out;
    p_compress(out.data(), p);
    return out;
}

}  // namespace

SigningKey signing_key_from_seed(std::span<const uint8_t> seed) {
    SigningKey k;
    Sc a = nonzero_scalar_from_hash(tagged_hash("efl.sig.scalar.v1", seed));
    sc_to_bytes(k.scalar.data(), a);
    Digest nk = tagged_hash("efl.sig.nonce.v1", seed);
    std::copy(nk.begin(), nk.end(), k.nonce_key.begin());
    k.public_key = compress_key(p_scalar_mult(k.scalar.data(), base_point()));
    return k;
}

Sig64 sign(const SigningKey& key, std::span<const uint8_t> msg) {
    // deterministic nonce: two tagged hashes widened to 512 bits, reduced
    Digest h1 = tagged_hash("efl.sig.r1.v1", key.nonce_key, msg);
    Digest h2 = tagged_hash("efl.sig.r2.v1", key.nonce_key, msg);
    uint8_t wide[64];
    std::memcpy(wide, h1.data(), 32);
    std::memcpy(wide + 32, h2.data(), 32);
    Sc r = sc_from_bytes_mod_l(wide, 64);
    if (sc_is_zero(r)) r[0] = 1;

    uint8_t rb[32];
    sc_to_bytes(rb, r);
    Key32 r_enc = compress_key(p_scalar_mult(rb, base_point()));

    Sc k = challenge_scalar(r_enc.data(), key.public_key, msg);
    Sc a = sc_from_bytes_mod_l(key.scalar.data(), 32);
    Sc s = sc_mul_add(k, a, r);  // s = k*a + r mod L

    Sig64 sig;
    std::memcpy(sig.data(), r_enc.data(), 32);
    sc_to_bytes(sig.data() + 32, s);
    return sig;
}

bool verify(const Key32& public_key, std::span<const uint8_t> msg, const Sig64& sig) {
    const uint8_t* r_enc = sig.data();
    const uint8_t* s_bytes = sig.data() + 32;
    if (!sc_bytes_canonical(s_bytes)) return false;

    Point a, r;
    if (!p_decompress(a, public_key.data())) return false;
    if (!p_decompress(r, r_enc)) return false;

    Sc k = challenge_scalar(r_enc, public_key, msg);
    uint8_t kb[32];
    sc_to_bytes(kb, k);

    // accept iff s*B == R + k*A
    Point lhs = p_scalar_mult(s_bytes, base_point());
    Point rhs = p_add(r, p_scalar_mult(kb, a));
    return p_equal(lhs, rhs);
}

DhKeyPair dh_keypair_from_seed(std::span<const uint8_t> seed) {
    DhKeyPair kp;
    Sc e = nonzero_scalar_from_hash(tagged_hash("efl.dh.scalar.v1", seed));
    sc_to_bytes(kp.secret.data(), e);
    kp.public_key = compress_key(p_scalar_mult(kp.secret.data(), base_point()));
    return kp;
}

DhKeyPair dh_keypair_random() {
    Key32 seed = random_key32();
    return dh_keypair_from_seed(seed);
}

std::optional<Key32> dh_shared(const Key32& secret, const Key32& peer_public) {
    Point p;
    if (!p_decompress(p, peer_public.data())) return std::nullopt;
    // reject the small-order subgroup: 8P must not be the identity
    Point p8 = p_add(p_add(p_add(p, p), p_add(p, p)), p_add(p_add(p, p), p_add(p, p)));
    if (p_is_identity(p8)) return std::nullopt;
    Point s = p_scalar_mult(secret.data(), p);
    if (p_is_identity(s)) return std::nullopt;
    return compress_key(s);
}

Key32 scalar_mult_base(const Key32& scalar) {
    return compress_key(p_scalar_mult(scalar.data(), base_point()));
}

Key32 random_key32() {
    Key32 out;
    if (getentropy(out.data(), out.size()) != 0) throw IoError("getentropy failed");
    return out;
}

}  // namespace efl::ecc
