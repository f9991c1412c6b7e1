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

#include <bit>
#include <cstring>
#include <span>
#include <string>

#include "efl/common.hpp"

namespace efl {

// Little-endian scalar writer. All persisted and wire formats in this
// project go through these two classes so the byte order is fixed in
// exactly one place.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append_le(v); }
    void u32(uint32_t v) { append_le(v); }
    void u64(uint64_t v) { append_le(v); }
    void f32(float v) { append_le(std::bit_cast<uint32_t>(v)); }
    void f64(double v) { append_le(std::bit_cast<uint64_t>(v)); }
    void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void str(const std::string& s) {
        u32(uint32_t(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    size_t size() const { return buf_.size(); }
    Bytes take() { return std::move(buf_); }
    const Bytes& view() const { return buf_; }

private:
    template <typename U>
    void append_le(U v) {
        for (size_t i = 0; i < sizeof(U); ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }

    Bytes buf_;
};

// Matching reader. Throws DecodeError carrying the offending offset; layers
// that parse files translate it into FormatError at the call site.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return read_le<uint8_t>(); }
    uint16_t u16() { return read_le<uint16_t>(); }
    uint32_t u32() { return read_le<uint32_t>(); }
    uint64_t u64() { return read_le<uint64_t>(); }
    float f32() { return std::bit_cast<float>(read_le<uint32_t>()); }
    double f64() { return std::bit_cast<double>(read_le<uint64_t>()); }

    std::span<const uint8_t> raw(size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::string str() {
        uint32_t n = u32();
        auto s = raw(n);
        return std::string(reinterpret_cast<const char*>(s.data()), s.size());
    }

    size_t offset() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

    void expect_end() const {
        if (pos_ != data_.size()) throw DecodeError("trailing bytes after message", pos_);
    }

private:
    void need(size_t n) const {
        if (data_.size() - pos_ < n) throw DecodeError("input truncated", pos_);
    }

    template <typename U>
    U read_le() {
        need(sizeof(U));
        U v = 0;
        for (size_t i = 0; i < sizeof(U); ++i) v |= U(uint64_t(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace efl
