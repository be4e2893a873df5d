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
#include "ledgerehr/hash.hpp"
#include "ledgerehr/identity.hpp"
#include "ledgerehr/record.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ledgerehr {

enum class OpKind : std::uint8_t
{
  CreateRecord     = 1,
  UpdateRecord     = 2,
  RegisterIdentity = 3,
};

std::string           to_string(OpKind kind);
std::optional<OpKind> op_kind_from_string(std::string_view s);

/// A signed, timestamped ledger operation.
///
/// tx_hash   = SHA-256(op_kind(1) || len || payload || actor_id(16) || timestamp_ms(8))
/// signature = Ed25519(actor key, tx_hash)
///
/// The wire encoding is the hash preimage followed by the 64-byte signature;
/// tx_hash is recomputed on decode, never transmitted.
struct Transaction
{
  Hash32        tx_hash;
  OpKind        op_kind{OpKind::CreateRecord};
  Bytes         payload;
  IdentityId    actor_id;
  std::uint64_t timestamp_ms{0};
  Signature     signature;

  bool operator==(Transaction const &) const = default;
};

class UnknownActor : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

Bytes  tx_preimage(OpKind kind, ByteView payload, IdentityId const &actor,
                   std::uint64_t timestamp_ms);
Hash32 compute_tx_hash(OpKind kind, ByteView payload, IdentityId const &actor,
                       std::uint64_t timestamp_ms);

/// Builds a transaction around an externally produced signature (the API path,
/// where the client signs tx_hash itself).
Transaction assemble_transaction(OpKind kind, Bytes payload, IdentityId const &actor,
                                 std::uint64_t timestamp_ms, Signature const &signature);

/// Computes tx_hash and signs it; no registry checks.
Transaction seal_transaction(OpKind kind, Bytes payload, IdentityId const &actor,
                             std::uint64_t timestamp_ms, PrivateKey const &key);

/// Record transaction for a registered actor. Throws InvalidRecord or
/// UnknownActor (unregistered, revoked, or signer key not the actor's key).
Transaction make_transaction(OpKind kind, PatientRecord const &record, IdentityId const &actor,
                             std::uint64_t timestamp_ms, KeyPair const &signer,
                             Registry const &registry);

bool verify_transaction(Transaction const &tx, PublicKey const &key);

/// Checks the signature against the actor's key in `registry`.
bool verify_transaction(Transaction const &tx, Registry const &registry);

Bytes       encode_transaction(Transaction const &tx);
Transaction decode_transaction(ByteView bytes);

/// RegisterIdentity payload: len || identity encoding || admin signature(64).
struct Registration
{
  StakeholderIdentity identity;
  Signature           admin_signature;
};

Bytes        encode_registration(Registration const &reg);
Registration decode_registration(ByteView payload);

}  // namespace ledgerehr
