//------------------------------------------------------------------------------
//
//   Copyright 2026 The LedgerEHR Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ledgerehr {

using Bytes    = std::vector<std::uint8_t>;
using ByteView = std::span<std::uint8_t const>;

inline ByteView as_bytes(std::string_view s)
{
  return {reinterpret_cast<std::uint8_t const *>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);

/// Parses lowercase or uppercase hex. Throws std::invalid_argument on odd
/// length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// Raised by ByteReader and every decode_* function.
class DecodeError : public std::runtime_error
{
public:
  enum class Kind
  {
    MalformedFrame,
    TrailingBytes,
  };

  DecodeError(Kind kind, std::string const &what)
    : std::runtime_error(what)
    , kind_(kind)
  {}

  Kind kind() const noexcept
  {
    return kind_;
  }

private:
  Kind kind_;
};

/// Big-endian writer used by every canonical encoding in the project.
/// Variable-length fields are prefixed with a 4-byte big-endian length.
class ByteWriter
{
public:
  ByteWriter &u8(std::uint8_t v);
  ByteWriter &u16(std::uint16_t v);
  ByteWriter &u32(std::uint32_t v);
  ByteWriter &u64(std::uint64_t v);
  ByteWriter &raw(ByteView data);
  ByteWriter &var(ByteView data);  // length-prefixed
  ByteWriter &var(std::string_view s)
  {
    return var(as_bytes(s));
  }

  template <std::size_t N>
  ByteWriter &fixed(std::array<std::uint8_t, N> const &a)
  {
    return raw(ByteView{a.data(), a.size()});
  }

  Bytes const &bytes() const &
  {
    return out_;
  }
  Bytes take() &&
  {
    return std::move(out_);
  }

private:
  Bytes out_;
};

class ByteReader
{
public:
  explicit ByteReader(ByteView data)
    : data_(data)
  {}

  std::uint8_t  u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView      raw(std::size_t n);
  ByteView      var();
  std::string   var_string();

  template <std::size_t N>
  std::array<std::uint8_t, N> fixed()
  {
    std::array<std::uint8_t, N> a{};
    auto                        v = raw(N);
    std::copy(v.begin(), v.end(), a.begin());
    return a;
  }

  std::size_t remaining() const noexcept
  {
    return data_.size() - pos_;
  }
  std::size_t position() const noexcept
  {
    return pos_;
  }

  /// Throws TrailingBytes unless the whole input was consumed.
  void expect_end(char const *what) const;

private:
  ByteView    data_;
  std::size_t pos_{0};
};

}  // namespace ledgerehr
