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

#include "ledgerehr/bytes.hpp"

#include <array>
#include <limits>

namespace ledgerehr {
namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c)
{
  if (c >= '0' && c <= '9')
  {
    return c - '0';
  }
  if (c >= 'a' && c <= 'f')
  {
    return c - 'a' + 10;
  }
  if (c >= 'A' && c <= 'F')
  {
    return c - 'A' + 10;
  }
  return -1;
}

}  // namespace

std::string to_hex(ByteView bytes)
{
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes)
  {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0)
  {
    throw std::invalid_argument("hex string has odd length");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
  {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0)
    {
      throw std::invalid_argument("invalid hex character");
    }
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

ByteWriter &ByteWriter::u8(std::uint8_t v)
{
  out_.push_back(v);
  return *this;
}

ByteWriter &ByteWriter::u16(std::uint16_t v)
{
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter &ByteWriter::u32(std::uint32_t v)
{
  std::array<std::uint8_t, 4> buf{};
  for (std::size_t i = 0; i < buf.size(); ++i)
  {
    buf[i] = static_cast<std::uint8_t>(v >> (8 * (buf.size() - 1 - i)));
  }
  out_.insert(out_.end(), buf.begin(), buf.end());
  return *this;
}

ByteWriter &ByteWriter::u64(std::uint64_t v)
{
  std::array<std::uint8_t, 8> buf{};
  for (std::size_t i = 0; i < buf.size(); ++i)
  {
    buf[i] = static_cast<std::uint8_t>(v >> (8 * (buf.size() - 1 - i)));
  }
  out_.insert(out_.end(), buf.begin(), buf.end());
  return *this;
}

ByteWriter &ByteWriter::raw(ByteView data)
{
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

ByteWriter &ByteWriter::var(ByteView data)
{
  if (data.size() > std::numeric_limits<std::uint32_t>::max())
  {
    throw std::length_error("field exceeds 4-byte length prefix");
  }
  u32(static_cast<std::uint32_t>(data.size()));
  return raw(data);
}

ByteView ByteReader::raw(std::size_t n)
{
  if (n > remaining())
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame,
                      "truncated input: need " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_) + ", have " + std::to_string(remaining()));
  }
  auto v = data_.subspan(pos_, n);
  pos_ += n;
  return v;
}

std::uint8_t ByteReader::u8()
{
  return raw(1)[0];
}

std::uint16_t ByteReader::u16()
{
  auto v = raw(2);
  return static_cast<std::uint16_t>((v[0] << 8) | v[1]);
}

std::uint32_t ByteReader::u32()
{
  auto          v = raw(4);
  std::uint32_t r = 0;
  for (auto b : v)
  {
    r = (r << 8) | b;
  }
  return r;
}

std::uint64_t ByteReader::u64()
{
  auto          v = raw(8);
  std::uint64_t r = 0;
  for (auto b : v)
  {
    r = (r << 8) | b;
  }
  return r;
}

ByteView ByteReader::var()
{
  auto n = u32();
  return raw(n);
}

std::string ByteReader::var_string()
{
  auto v = var();
  return {reinterpret_cast<char const *>(v.data()), v.size()};
}

void ByteReader::expect_end(char const *what) const
{
  if (remaining() != 0)
  {
    throw DecodeError(DecodeError::Kind::TrailingBytes,
                      std::string(what) + ": " + std::to_string(remaining()) + " trailing bytes");
  }
}

}  // namespace ledgerehr
