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

#include "ledgerehr/identity.hpp"

#include <sodium.h>

#include <fstream>
#include <sstream>

namespace ledgerehr {
namespace {

template <typename Array>
Array array_from_hex(std::string_view hex, char const *what)
{
  Bytes raw;
  try
  {
    raw = from_hex(hex);
  }
  catch (std::invalid_argument const &)
  {
    throw KeyError(std::string(what) + ": invalid hex");
  }
  Array a{};
  if (raw.size() != a.size())
  {
    throw KeyError(std::string(what) + ": expected " + std::to_string(a.size()) + " bytes");
  }
  std::copy(raw.begin(), raw.end(), a.begin());
  return a;
}

}  // namespace

IdentityId IdentityId::from_hex(std::string_view hex)
{
  return {array_from_hex<std::array<std::uint8_t, kSize>>(hex, "identity id")};
}

std::string IdentityId::hex() const
{
  return to_hex(view());
}

PublicKey PublicKey::from_hex(std::string_view hex)
{
  return {array_from_hex<std::array<std::uint8_t, kSize>>(hex, "public key")};
}

std::string PublicKey::hex() const
{
  return to_hex(view());
}

Signature Signature::from_hex(std::string_view hex)
{
  return {array_from_hex<std::array<std::uint8_t, kSize>>(hex, "signature")};
}

std::string Signature::hex() const
{
  return to_hex(view());
}

PrivateKey::~PrivateKey()
{
  sodium_memzero(secret_.data(), secret_.size());
}

Seed PrivateKey::seed() const
{
  Seed s{};
  std::copy_n(secret_.begin(), s.size(), s.begin());
  return s;
}

IdentityId KeyPair::id() const
{
  return identity_of(public_key);
}

KeyPair keygen(std::optional<Seed> const &seed)
{
  ensure_crypto_initialised();
  Seed s{};
  if (seed)
  {
    s = *seed;
  }
  else
  {
    randombytes_buf(s.data(), s.size());
  }
  KeyPair                      kp;
  std::array<std::uint8_t, 64> sk{};
  crypto_sign_seed_keypair(kp.public_key.bytes.data(), sk.data(), s.data());
  kp.private_key = PrivateKey(sk);
  sodium_memzero(sk.data(), sk.size());
  sodium_memzero(s.data(), s.size());
  return kp;
}

KeyPair keygen_from_label(std::string_view label)
{
  return keygen(sha256(as_bytes(label)).bytes);
}

IdentityId identity_of(PublicKey const &key)
{
  auto       digest = sha256(key.view());
  IdentityId id;
  std::copy_n(digest.bytes.begin(), IdentityId::kSize, id.bytes.begin());
  return id;
}

Signature sign_payload(PrivateKey const &key, ByteView message)
{
  ensure_crypto_initialised();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                       key.secret().data());
  return sig;
}

bool verify_payload(PublicKey const &key, ByteView message, Signature const &signature)
{
  ensure_crypto_initialised();
  return crypto_sign_verify_detached(signature.bytes.data(), message.data(), message.size(),
                                     key.bytes.data()) == 0;
}

bool VerifyCache::verify(PublicKey const &key, ByteView message, Signature const &signature)
{
  auto digest = Sha256{}.update(key.view()).update(signature.view()).update(message).finish();
  {
    std::lock_guard lock(mutex_);
    if (auto it = results_.find(digest); it != results_.end())
    {
      ++hits_;
      return it->second;
    }
  }
  bool ok = verify_payload(key, message, signature);
  std::lock_guard lock(mutex_);
  results_.emplace(digest, ok);
  return ok;
}

Signature SignCache::sign(PrivateKey const &key, ByteView message)
{
  auto digest = Sha256{}.update(ByteView{key.secret().data(), key.secret().size()}).update(message).finish();
  {
    std::lock_guard lock(mutex_);
    if (auto it = signatures_.find(digest); it != signatures_.end())
    {
      return it->second;
    }
  }
  auto sig = sign_payload(key, message);
  std::lock_guard lock(mutex_);
  signatures_.emplace(digest, sig);
  return sig;
}

void write_seed_file(std::filesystem::path const &path, Seed const &seed)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out)
  {
    throw std::runtime_error("cannot open key file for writing: " + path.string());
  }
  out << to_hex(ByteView{seed.data(), seed.size()}) << '\n';
  if (!out)
  {
    throw std::runtime_error("failed writing key file: " + path.string());
  }
}

Seed read_seed_file(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw std::runtime_error("cannot open key file: " + path.string());
  }
  std::string line;
  std::getline(in, line);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
  {
    line.pop_back();
  }
  return array_from_hex<Seed>(line, "seed file");
}

std::string to_string(Role role)
{
  switch (role)
  {
  case Role::Admin:
    return "Admin";
  case Role::Organizational:
    return "Organizational";
  case Role::Patient:
    return "Patient";
  }
  return "Unknown";
}

std::optional<Role> role_from_string(std::string_view s)
{
  if (s == "Admin" || s == "admin")
  {
    return Role::Admin;
  }
  if (s == "Organizational" || s == "organizational")
  {
    return Role::Organizational;
  }
  if (s == "Patient" || s == "patient")
  {
    return Role::Patient;
  }
  return std::nullopt;
}

StakeholderIdentity StakeholderIdentity::make(PublicKey const &key, Role role,
                                              std::optional<std::string> linked_patient_id,
                                              std::uint64_t              registered_at_ms)
{
  return {identity_of(key), key, role, std::move(linked_patient_id), registered_at_ms};
}

Bytes encode_identity(StakeholderIdentity const &identity)
{
  ByteWriter w;
  w.fixed(identity.identity_id.bytes).fixed(identity.public_key.bytes);
  w.u8(static_cast<std::uint8_t>(identity.role));
  if (identity.linked_patient_id)
  {
    w.u8(1).var(*identity.linked_patient_id);
  }
  else
  {
    w.u8(0);
  }
  w.u64(identity.registered_at_ms);
  return std::move(w).take();
}

StakeholderIdentity decode_identity(ByteView bytes)
{
  ByteReader          r(bytes);
  StakeholderIdentity id;
  id.identity_id.bytes = r.fixed<IdentityId::kSize>();
  id.public_key.bytes  = r.fixed<PublicKey::kSize>();
  auto role            = r.u8();
  if (role < 1 || role > 3)
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "identity: bad role tag");
  }
  id.role   = static_cast<Role>(role);
  auto flag = r.u8();
  if (flag > 1)
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "identity: bad link flag");
  }
  if (flag == 1)
  {
    id.linked_patient_id = r.var_string();
  }
  id.registered_at_ms = r.u64();
  r.expect_end("identity");
  return id;
}

std::string to_string(RegistryError::Kind kind)
{
  switch (kind)
  {
  case RegistryError::Kind::DuplicateIdentity:
    return "DuplicateIdentity";
  case RegistryError::Kind::BadAdminSignature:
    return "BadAdminSignature";
  case RegistryError::Kind::MissingPatientLink:
    return "MissingPatientLink";
  case RegistryError::Kind::InconsistentIdentity:
    return "InconsistentIdentity";
  case RegistryError::Kind::UnknownIdentity:
    return "UnknownIdentity";
  }
  return "Unknown";
}

void Registry::add(StakeholderIdentity const &identity)
{
  if (identity.identity_id != identity_of(identity.public_key))
  {
    throw RegistryError(RegistryError::Kind::InconsistentIdentity,
                        "identity id does not match public key");
  }
  if (identity.role == Role::Patient &&
      (!identity.linked_patient_id || identity.linked_patient_id->empty()))
  {
    throw RegistryError(RegistryError::Kind::MissingPatientLink,
                        "patient identity requires linked_patient_id");
  }
  if (index_.contains(identity.identity_id))
  {
    throw RegistryError(RegistryError::Kind::DuplicateIdentity,
                        "identity already registered: " + identity.identity_id.hex());
  }
  index_.emplace(identity.identity_id, entries_.size());
  entries_.push_back({identity, false});
}

Registry Registry::bootstrap(std::vector<StakeholderIdentity> const &identities)
{
  Registry r;
  for (auto const &id : identities)
  {
    r.add(id);
  }
  return r;
}

RegistryEntry const *Registry::find(IdentityId const &id) const
{
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

bool Registry::is_active(IdentityId const &id) const
{
  auto const *e = find(id);
  return e != nullptr && !e->revoked;
}

Bytes Registry::encode() const
{
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (auto const &e : entries_)
  {
    w.var(encode_identity(e.identity)).u8(e.revoked ? 1 : 0);
  }
  return std::move(w).take();
}

namespace {

void require_admin(Registry const &registry, IdentityId const &admin_id, ByteView message,
                   Signature const &signature)
{
  auto const *admin = registry.find(admin_id);
  if (admin == nullptr || admin->revoked || admin->identity.role != Role::Admin ||
      !verify_payload(admin->identity.public_key, message, signature))
  {
    throw RegistryError(RegistryError::Kind::BadAdminSignature,
                        "operation requires a valid signature by a registered admin");
  }
}

}  // namespace

Registry register_stakeholder(Registry const &registry, StakeholderIdentity const &identity,
                              IdentityId const &admin_id, Signature const &admin_signature)
{
  require_admin(registry, admin_id, encode_identity(identity), admin_signature);
  Registry next = registry;
  next.add(identity);
  return next;
}

Bytes revocation_message(IdentityId const &target)
{
  ByteWriter w;
  w.var(std::string_view{"revoke"}).fixed(target.bytes);
  return std::move(w).take();
}

Registry revoke_stakeholder(Registry const &registry, IdentityId const &target,
                            IdentityId const &admin_id, Signature const &admin_signature)
{
  require_admin(registry, admin_id, revocation_message(target), admin_signature);
  auto it = registry.index_.find(target);
  if (it == registry.index_.end())
  {
    throw RegistryError(RegistryError::Kind::UnknownIdentity,
                        "cannot revoke unknown identity " + target.hex());
  }
  Registry next                      = registry;
  next.entries_[it->second].revoked = true;
  return next;
}

std::string to_string(Action action)
{
  switch (action)
  {
  case Action::AddRecord:
    return "AddRecord";
  case Action::UpdateRecord:
    return "UpdateRecord";
  case Action::ReadRecord:
    return "ReadRecord";
  case Action::ListRecords:
    return "ListRecords";
  case Action::ReadChain:
    return "ReadChain";
  case Action::RegisterIdentity:
    return "RegisterIdentity";
  }
  return "Unknown";
}

AccessDecision authorize(Registry const &registry, IdentityId const &actor, Action action,
                         std::optional<std::string> const &resource)
{
  auto const *entry = registry.find(actor);
  if (entry == nullptr)
  {
    return {false, "unregistered"};
  }
  if (entry->revoked)
  {
    return {false, "revoked"};
  }
  auto const &id = entry->identity;
  switch (id.role)
  {
  case Role::Admin:
    return {true, "admin:all"};
  case Role::Organizational:
    if (action == Action::RegisterIdentity)
    {
      return {false, "organizational:no-identity-admin"};
    }
    return {true, "organizational:" + to_string(action)};
  case Role::Patient:
    if (action == Action::ReadChain)
    {
      return {true, "patient:ReadChain-own"};
    }
    if (action == Action::ReadRecord || action == Action::UpdateRecord)
    {
      if (resource && id.linked_patient_id && *resource == *id.linked_patient_id)
      {
        return {true, "patient:" + to_string(action) + "-own"};
      }
      return {false, "patient:link-mismatch"};
    }
    return {false, "patient:not-permitted"};
  }
  return {false, "deny-default"};
}

}  // namespace ledgerehr
