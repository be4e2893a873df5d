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

#include "ledgerehr/bytes.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ledgerehr {

/// SHA-256 digest. Hex rendering is always lowercase, 64 characters.
struct Hash32
{
  static constexpr std::size_t kSize = 32;

  std::array<std::uint8_t, kSize> bytes{};

  static Hash32 zero()
  {
    return {};
  }
  static Hash32 filled(std::uint8_t value);

  /// Throws std::invalid_argument unless the input is exactly 64 hex chars.
  static Hash32 from_hex(std::string_view hex);

  std::string hex() const;
  ByteView    view() const
  {
    return {bytes.data(), bytes.size()};
  }
  bool is_zero() const;

  auto operator<=>(Hash32 const &) const = default;
  bool operator==(Hash32 const &) const  = default;
};

Hash32 sha256(ByteView data);

/// Incremental SHA-256, for hashing a preimage built from several pieces.
class Sha256
{
public:
  Sha256();
  Sha256 &update(ByteView data);
  Sha256 &update(std::uint8_t byte);
  Hash32  finish();

private:
  alignas(64) std::array<std::uint8_t, 128> state_{};
};

/// libsodium must be initialised once before any crypto call; every entry
/// point in this library calls this.
void ensure_crypto_initialised();

}  // namespace ledgerehr

template <>
struct std::hash<ledgerehr::Hash32>
{
  std::size_t operator()(ledgerehr::Hash32 const &h) const noexcept
  {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(v); ++i)
    {
      v = (v << 8) | h.bytes[i];
    }
    return v;
  }
};
