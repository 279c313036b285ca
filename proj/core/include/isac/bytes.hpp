// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isac/geometry.hpp"

// Little-endian field codec. Fields are written in declared order with no
// padding; identical values always produce identical bytes.

namespace isac
{

class DecodeError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class ByteWriter
{
  public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
    void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }

    // u32 length prefix + raw bytes.
    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    // u16 length prefix + raw bytes (bag topic table).
    void str16(std::string_view s)
    {
        if (s.size() > 0xFFFF)
            throw std::length_error("string too long for u16 length prefix");
        u16(static_cast<std::uint16_t>(s.size()));
        raw(s.data(), s.size());
    }
    void vec3(const Vec3 &v)
    {
        f64(v.x), f64(v.y), f64(v.z);
    }
    void quat(const Quat &q)
    {
        f64(q.w), f64(q.x), f64(q.y), f64(q.z);
    }
    void raw(const void *data, std::size_t n)
    {
        const auto *p = static_cast<const std::uint8_t *>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    const std::vector<std::uint8_t> &bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

  private:
    void put_le(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i)
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader
{
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get_le(8)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
    double f64() { return std::bit_cast<double>(get_le(8)); }

    std::string str()
    {
        const std::uint32_t n = u32();
        return take_string(n);
    }
    std::string str16()
    {
        const std::uint16_t n = u16();
        return take_string(n);
    }
    Vec3 vec3()
    {
        const double x = f64(), y = f64(), z = f64();
        return {x, y, z};
    }
    Quat quat()
    {
        const double w = f64(), x = f64(), y = f64(), z = f64();
        return {w, x, y, z};
    }
    std::span<const std::uint8_t> raw(std::size_t n)
    {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    // Throws DecodeError if any bytes are left over.
    void expect_end() const
    {
        if (!done())
            throw DecodeError("trailing bytes after message");
    }

  private:
    void need(std::size_t n) const
    {
        if (data_.size() - pos_ < n)
            throw DecodeError("unexpected end of data");
    }
    std::uint64_t get_le(int n)
    {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string take_string(std::size_t n)
    {
        auto s = raw(n);
        return std::string(reinterpret_cast<const char *>(s.data()), s.size());
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace isac
