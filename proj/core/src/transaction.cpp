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

#include "ledgerehr/transaction.hpp"

namespace ledgerehr {

std::string to_string(OpKind kind)
{
  switch (kind)
  {
  case OpKind::CreateRecord:
    return "CreateRecord";
  case OpKind::UpdateRecord:
    return "UpdateRecord";
  case OpKind::RegisterIdentity:
    return "RegisterIdentity";
  }
  return "Unknown";
}

std::optional<OpKind> op_kind_from_string(std::string_view s)
{
  if (s == "CreateRecord" || s == "create")
  {
    return OpKind::CreateRecord;
  }
  if (s == "UpdateRecord" || s == "update")
  {
    return OpKind::UpdateRecord;
  }
  if (s == "RegisterIdentity" || s == "register")
  {
    return OpKind::RegisterIdentity;
  }
  return std::nullopt;
}

Bytes tx_preimage(OpKind kind, ByteView payload, IdentityId const &actor,
                  std::uint64_t timestamp_ms)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind)).var(payload).fixed(actor.bytes).u64(timestamp_ms);
  return std::move(w).take();
}

Hash32 compute_tx_hash(OpKind kind, ByteView payload, IdentityId const &actor,
                       std::uint64_t timestamp_ms)
{
  return sha256(tx_preimage(kind, payload, actor, timestamp_ms));
}

Transaction assemble_transaction(OpKind kind, Bytes payload, IdentityId const &actor,
                                 std::uint64_t timestamp_ms, Signature const &signature)
{
  Transaction tx;
  tx.op_kind      = kind;
  tx.payload      = std::move(payload);
  tx.actor_id     = actor;
  tx.timestamp_ms = timestamp_ms;
  tx.tx_hash      = compute_tx_hash(kind, tx.payload, actor, timestamp_ms);
  tx.signature    = signature;
  return tx;
}

Transaction seal_transaction(OpKind kind, Bytes payload, IdentityId const &actor,
                             std::uint64_t timestamp_ms, PrivateKey const &key)
{
  auto tx      = assemble_transaction(kind, std::move(payload), actor, timestamp_ms, {});
  tx.signature = sign_payload(key, tx.tx_hash.view());
  return tx;
}

Transaction make_transaction(OpKind kind, PatientRecord const &record, IdentityId const &actor,
                             std::uint64_t timestamp_ms, KeyPair const &signer,
                             Registry const &registry)
{
  if (kind == OpKind::RegisterIdentity)
  {
    throw std::invalid_argument("make_transaction: record transactions only");
  }
  auto const *entry = registry.find(actor);
  if (entry == nullptr || entry->revoked)
  {
    throw UnknownActor("actor not registered: " + actor.hex());
  }
  if (entry->identity.public_key != signer.public_key)
  {
    throw UnknownActor("signer key does not belong to actor " + actor.hex());
  }
  return seal_transaction(kind, canonical_encode_record(record), actor, timestamp_ms,
                          signer.private_key);
}

bool verify_transaction(Transaction const &tx, PublicKey const &key)
{
  auto expected = compute_tx_hash(tx.op_kind, tx.payload, tx.actor_id, tx.timestamp_ms);
  return expected == tx.tx_hash && verify_payload(key, tx.tx_hash.view(), tx.signature);
}

bool verify_transaction(Transaction const &tx, Registry const &registry)
{
  auto const *entry = registry.find(tx.actor_id);
  return entry != nullptr && !entry->revoked && verify_transaction(tx, entry->identity.public_key);
}

Bytes encode_transaction(Transaction const &tx)
{
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(tx.op_kind))
      .var(tx.payload)
      .fixed(tx.actor_id.bytes)
      .u64(tx.timestamp_ms)
      .fixed(tx.signature.bytes);
  return std::move(w).take();
}

Transaction decode_transaction(ByteView bytes)
{
  ByteReader r(bytes);
  auto       tag = r.u8();
  if (tag < 1 || tag > 3)
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "transaction: bad op kind");
  }
  auto payload_view = r.var();
  Bytes payload(payload_view.begin(), payload_view.end());
  IdentityId actor;
  actor.bytes  = r.fixed<IdentityId::kSize>();
  auto ts      = r.u64();
  Signature sig;
  sig.bytes = r.fixed<Signature::kSize>();
  r.expect_end("transaction");
  return assemble_transaction(static_cast<OpKind>(tag), std::move(payload), actor, ts, sig);
}

Bytes encode_registration(Registration const &reg)
{
  ByteWriter w;
  w.var(encode_identity(reg.identity)).fixed(reg.admin_signature.bytes);
  return std::move(w).take();
}

Registration decode_registration(ByteView payload)
{
  ByteReader   r(payload);
  Registration reg;
  reg.identity              = decode_identity(r.var());
  reg.admin_signature.bytes = r.fixed<Signature::kSize>();
  r.expect_end("registration");
  return reg;
}

}  // namespace ledgerehr
