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

#include <cstdint>

namespace efl {

// splitmix64. Standard-library engines are deterministic per platform but
// their distributions are not; everything that must be replayable (model
// init, data generation, batch schedules) goes through this instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits of entropy.
    double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_real(); }

    // Uniform in [0, n). Multiply-shift; bias is < 2^-64 per draw.
    uint64_t next_below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    uint64_t state_;
};

// One-shot mix, used to derive independent per-role seed streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    return r.next_u64();
}

}  // namespace efl
