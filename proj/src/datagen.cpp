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

#include "efl/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "efl/bytes.hpp"
#include "efl/rng.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'R', 'M', 'D', 'S', '0', '1'};
constexpr uint16_t kFormatVersion = 1;

// Teacher scales: the dense part dominates so the task stays learnable at
// desk scale (a 1000-row vocab gives each embedding row only a handful of
// training observations), while the per-row biases keep the tables relevant.
constexpr double kTeacherDenseScale = 4.0;
constexpr double kTeacherBiasScale = 0.1;

std::vector<uint32_t> effective_vocab(const SyntheticSpec& spec) {
    if (!spec.vocab_sizes.empty()) return spec.vocab_sizes;
    return std::vector<uint32_t>(spec.num_sparse, 1000);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (num_samples == 0) throw ConfigError("num_samples must be positive");
    if (num_dense == 0) throw ConfigError("num_dense must be positive");
    if (!vocab_sizes.empty() && vocab_sizes.size() != num_sparse)
        throw ConfigError("vocab_sizes must match num_sparse");
    for (uint32_t v : vocab_sizes)
        if (v == 0) throw ConfigError("vocab size of zero");
    if (!(teacher_noise >= 0.0 && teacher_noise < 1.0))
        throw ConfigError("teacher_noise must lie in [0, 1)");
}

Digest spec_digest(const SyntheticSpec& spec) {
    ByteWriter w;
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("EFLSPEC1"), 8));
    w.u64(spec.num_samples);
    w.u16(spec.num_dense);
    w.u16(spec.num_sparse);
    for (uint32_t v : effective_vocab(spec)) w.u32(v);
    w.u64(spec.seed);
    w.f64(spec.teacher_noise);
    return Sha256::digest(w.view());
}

Dataset generate(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.num_dense = spec.num_dense;
    ds.num_sparse = spec.num_sparse;
    ds.vocab_sizes = effective_vocab(spec);
    ds.spec_digest = spec_digest(spec);

    Rng rng(spec.seed);

    // teacher first, then records; the draw order is part of the format
    std::vector<double> w(spec.num_dense);
    for (auto& v : w) v = rng.uniform(-kTeacherDenseScale, kTeacherDenseScale);
    std::vector<std::vector<double>> bias(spec.num_sparse);
    for (uint16_t t = 0; t < spec.num_sparse; ++t) {
        bias[t].resize(ds.vocab_sizes[t]);
        for (auto& v : bias[t]) v = rng.uniform(-kTeacherBiasScale, kTeacherBiasScale);
    }

    ds.records.reserve(spec.num_samples);
    for (uint64_t i = 0; i < spec.num_samples; ++i) {
        Record r;
        r.dense.resize(spec.num_dense);
        r.sparse.resize(spec.num_sparse);
        double z = 0;
        for (uint16_t j = 0; j < spec.num_dense; ++j) {
            r.dense[j] = float(rng.next_real());
            z += w[j] * (double(r.dense[j]) - 0.5);
        }
        for (uint16_t t = 0; t < spec.num_sparse; ++t) {
            r.sparse[t] = uint32_t(rng.next_below(ds.vocab_sizes[t]));
            z += bias[t][r.sparse[t]];
        }
        double u = rng.next_real();
        double p;
        if (spec.teacher_noise == 0.0) {
            p = z > 0 ? 1.0 : (z < 0 ? 0.0 : 0.5);
        } else {
            p = 1.0 / (1.0 + std::exp(-z / spec.teacher_noise));
        }
        r.label = p > u ? 1 : 0;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::vector<Shard> shard(const Dataset& dataset, uint32_t k) {
    const uint64_t n = dataset.records.size();
    if (k == 0) throw ShardError("shard count must be positive");
    if (k > n) throw ShardError("more shards than samples");

    std::vector<Shard> shards;
    uint64_t base = n / k, extra = n % k, pos = 0;
    for (uint32_t i = 0; i < k; ++i) {
        uint64_t take = base + (i < extra ? 1 : 0);
        Shard s;
        s.worker_index = i;
        s.parent_digest = dataset.spec_digest;
        s.records.assign(dataset.records.begin() + long(pos),
                         dataset.records.begin() + long(pos + take));
        pos += take;
        shards.push_back(std::move(s));
    }
    return shards;
}

Bytes serialize(const Dataset& dataset) {
    ByteWriter w;
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 8));
    w.u16(kFormatVersion);
    w.u64(dataset.records.size());
    w.u16(dataset.num_dense);
    w.u16(dataset.num_sparse);
    for (uint32_t v : dataset.vocab_sizes) w.u32(v);
    w.raw(dataset.spec_digest);
    for (const Record& r : dataset.records) {
        w.u8(r.label);
        for (float f : r.dense) w.f32(f);
        for (uint32_t s : r.sparse) w.u32(s);
    }
    return w.take();
}

Dataset deserialize(std::span<const uint8_t> data) {
    try {
        ByteReader r(data);
        auto magic = r.raw(8);
        if (std::memcmp(magic.data(), kMagic, 8) != 0)
            throw FormatError("bad magic", 0);
        uint16_t version = r.u16();
        if (version != kFormatVersion)
            throw FormatError("unsupported format version " + std::to_string(version), 8);

        Dataset ds;
        uint64_t n = r.u64();
        ds.num_dense = r.u16();
        ds.num_sparse = r.u16();
        if (ds.num_dense == 0)
            throw FormatError("header declares zero dense features", r.offset());
        ds.vocab_sizes.resize(ds.num_sparse);
        for (auto& v : ds.vocab_sizes) {
            v = r.u32();
            if (v == 0) throw FormatError("header declares empty vocab", r.offset());
        }
        auto dig = r.raw(32);
        std::copy(dig.begin(), dig.end(), ds.spec_digest.begin());

        const uint64_t record_size = 1 + 4ull * ds.num_dense + 4ull * ds.num_sparse;
        if (r.remaining() != n * record_size)
            throw FormatError("record area is " + std::to_string(r.remaining()) +
                                  " bytes, header promises " + std::to_string(n * record_size),
                              r.offset());

        ds.records.reserve(n);
        for (uint64_t i = 0; i < n; ++i) {
            Record rec;
            size_t rec_off = r.offset();
            rec.label = r.u8();
            if (rec.label > 1) throw FormatError("label is not 0/1", rec_off);
            rec.dense.resize(ds.num_dense);
            for (auto& f : rec.dense) {
                f = r.f32();
                if (!std::isfinite(f)) throw FormatError("non-finite dense value", rec_off);
            }
            rec.sparse.resize(ds.num_sparse);
            for (uint16_t t = 0; t < ds.num_sparse; ++t) {
                rec.sparse[t] = r.u32();
                if (rec.sparse[t] >= ds.vocab_sizes[t])
                    throw FormatError("sparse index out of vocab range", rec_off);
            }
            ds.records.push_back(std::move(rec));
        }
        r.expect_end();
        return ds;
    } catch (const DecodeError& e) {
        throw FormatError(e.what(), e.offset);
    }
}

void write_file(const Dataset& dataset, const std::string& path) {
    Bytes data = serialize(dataset);
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) throw IoError("cannot open for writing: " + path);
    if (std::fwrite(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short write: " + path);
}

Dataset read_file(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::fseek(f.get(), 0, SEEK_END);
    long size = std::ftell(f.get());
    std::fseek(f.get(), 0, SEEK_SET);
    if (size < 0) throw IoError("cannot stat: " + path);
    Bytes data(static_cast<size_t>(size));
    if (!data.empty() && std::fread(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short read: " + path);
    return deserialize(data);
}

Dataset shard_as_dataset(const Dataset& parent, const Shard& s) {
    Dataset ds;
    ds.num_dense = parent.num_dense;
    ds.num_sparse = parent.num_sparse;
    ds.vocab_sizes = parent.vocab_sizes;
    ds.spec_digest = s.parent_digest;
    ds.records = s.records;
    return ds;
}

}  // namespace efl
