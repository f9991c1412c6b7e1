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
#include <string>
#include <vector>

#include "efl/common.hpp"
#include "efl/dlrm.hpp"

namespace efl {

// Synthetic Criteo-shaped click data. Labels come from a hidden linear
// teacher: z = w . (dense - 0.5) + sum_t bias[t][sparse_t], and the sample is
// positive when sigmoid(z / teacher_noise) exceeds an independent uniform
// draw. teacher_noise acts as a temperature: 0 degenerates to the hard
// threshold z > 0 (deterministic, learnable to ~100%), 1 samples the plain
// sigmoid. Everything is a pure function of the spec.
struct SyntheticSpec {
    uint64_t num_samples = 0;
    uint16_t num_dense = 13;
    uint16_t num_sparse = 26;
    std::vector<uint32_t> vocab_sizes;  // defaults to 1000 per table when empty
    uint64_t seed = 1;
    double teacher_noise = 0.0;  // in [0, 1)

    void validate() const;
};

struct Dataset {
    uint16_t num_dense = 13;
    uint16_t num_sparse = 26;
    std::vector<uint32_t> vocab_sizes;
    std::vector<Record> records;
    Digest spec_digest{};
};

struct Shard {
    uint32_t worker_index = 0;
    std::vector<Record> records;
    Digest parent_digest{};  // spec digest of the source dataset
};

Digest spec_digest(const SyntheticSpec& spec);

Dataset generate(const SyntheticSpec& spec);

// Contiguous split balanced to +-1: the first (n mod k) shards take the
// extra row. ShardError when k is 0 or exceeds the sample count.
std::vector<Shard> shard(const Dataset& dataset, uint32_t k);

// Binary layout, little-endian:
//   magic "DLRMDS01" | version u16=1 | num_samples u64 | num_dense u16 |
//   num_sparse u16 | vocab sizes u32 x num_sparse | spec digest (32)
// followed by records of (label u8, dense f32 x num_dense,
// sparse u32 x num_sparse) - 157 bytes each at the default shape.
Bytes serialize(const Dataset& dataset);
Dataset deserialize(std::span<const uint8_t> data);

void write_file(const Dataset& dataset, const std::string& path);
Dataset read_file(const std::string& path);

// A shard persisted or transferred as a standalone dataset file.
Dataset shard_as_dataset(const Dataset& parent, const Shard& s);

}  // namespace efl
