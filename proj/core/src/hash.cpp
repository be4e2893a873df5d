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

#include "ledgerehr/hash.hpp"

#include <sodium.h>

#include <stdexcept>

namespace ledgerehr {

static_assert(sizeof(crypto_hash_sha256_state) <= 128, "Sha256 state buffer too small");

void ensure_crypto_initialised()
{
  static int const status = sodium_init();
  if (status < 0)
  {
    throw std::runtime_error("libsodium initialisation failed");
  }
}

Hash32 Hash32::filled(std::uint8_t value)
{
  Hash32 h;
  h.bytes.fill(value);
  return h;
}

Hash32 Hash32::from_hex(std::string_view hex)
{
  if (hex.size() != kSize * 2)
  {
    throw std::invalid_argument("hash must be 64 hex characters");
  }
  auto   raw = ledgerehr::from_hex(hex);
  Hash32 h;
  std::copy(raw.begin(), raw.end(), h.bytes.begin());
  return h;
}

std::string Hash32::hex() const
{
  return to_hex(view());
}

bool Hash32::is_zero() const
{
  for (auto b : bytes)
  {
    if (b != 0)
    {
      return false;
    }
  }
  return true;
}

Hash32 sha256(ByteView data)
{
  ensure_crypto_initialised();
  Hash32 h;
  crypto_hash_sha256(h.bytes.data(), data.data(), data.size());
  return h;
}

Sha256::Sha256()
{
  ensure_crypto_initialised();
  crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state *>(state_.data()));
}

Sha256 &Sha256::update(ByteView data)
{
  crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state *>(state_.data()),
                            data.data(), data.size());
  return *this;
}

Sha256 &Sha256::update(std::uint8_t byte)
{
  return update(ByteView{&byte, 1});
}

Hash32 Sha256::finish()
{
  Hash32 h;
  crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state *>(state_.data()),
                           h.bytes.data());
  return h;
}

}  // namespace ledgerehr
