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

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ledgerehr {

/// 16-byte identity handle: the first 16 bytes of SHA-256(public key).
struct IdentityId
{
  static constexpr std::size_t kSize = 16;

  std::array<std::uint8_t, kSize> bytes{};

  static IdentityId from_hex(std::string_view hex);
  std::string       hex() const;
  ByteView          view() const
  {
    return {bytes.data(), bytes.size()};
  }

  auto operator<=>(IdentityId const &) const = default;
  bool operator==(IdentityId const &) const  = default;
};

struct PublicKey
{
  static constexpr std::size_t kSize = 32;

  std::array<std::uint8_t, kSize> bytes{};

  static PublicKey from_hex(std::string_view hex);
  std::string      hex() const;
  ByteView         view() const
  {
    return {bytes.data(), bytes.size()};
  }

  auto operator<=>(PublicKey const &) const = default;
  bool operator==(PublicKey const &) const  = default;
};

struct Signature
{
  static constexpr std::size_t kSize = 64;

  std::array<std::uint8_t, kSize> bytes{};

  static Signature from_hex(std::string_view hex);
  std::string      hex() const;
  ByteView         view() const
  {
    return {bytes.data(), bytes.size()};
  }

  auto operator<=>(Signature const &) const = default;
  bool operator==(Signature const &) const  = default;
};

using Seed = std::array<std::uint8_t, 32>;

/// Ed25519 secret key (seed || public key). Wiped on destruction.
class PrivateKey
{
public:
  PrivateKey() = default;
  explicit PrivateKey(std::array<std::uint8_t, 64> const &secret)
    : secret_(secret)
  {}
  PrivateKey(PrivateKey const &)            = default;
  PrivateKey &operator=(PrivateKey const &) = default;
  ~PrivateKey();

  Seed seed() const;

  std::array<std::uint8_t, 64> const &secret() const
  {
    return secret_;
  }

private:
  std::array<std::uint8_t, 64> secret_{};
};

struct KeyPair
{
  PublicKey  public_key;
  PrivateKey private_key;

  IdentityId id() const;
};

class KeyError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Seeded generation is deterministic; without a seed the key comes from the
/// system CSPRNG.
KeyPair keygen(std::optional<Seed> const &seed = std::nullopt);

/// Convenience for tests and the simulator: seed = SHA-256(label).
KeyPair keygen_from_label(std::string_view label);

IdentityId identity_of(PublicKey const &key);

Signature sign_payload(PrivateKey const &key, ByteView message);

/// False on any mismatch, never an error.
bool verify_payload(PublicKey const &key, ByteView message, Signature const &signature);

/// Memoised signature verification. Verification is a pure function, so the
/// cache can be shared freely between components in one process.
class VerifyCache
{
public:
  bool verify(PublicKey const &key, ByteView message, Signature const &signature);

  std::size_t hits() const
  {
    return hits_;
  }

private:
  std::mutex                        mutex_;
  std::unordered_map<Hash32, bool>  results_;
  std::size_t                       hits_{0};
};

/// Memoised signing. Ed25519 signatures are deterministic, so a cached
/// signature is the one sign_payload would produce.
class SignCache
{
public:
  Signature sign(PrivateKey const &key, ByteView message);

private:
  std::mutex                            mutex_;
  std::unordered_map<Hash32, Signature> signatures_;
};

/// Key file: the 32-byte seed, hex-encoded, on one line.
void write_seed_file(std::filesystem::path const &path, Seed const &seed);
Seed read_seed_file(std::filesystem::path const &path);

enum class Role : std::uint8_t
{
  Admin          = 1,
  Organizational = 2,
  Patient        = 3,
};

std::string         to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);

struct StakeholderIdentity
{
  IdentityId                 identity_id;
  PublicKey                  public_key;
  Role                       role{Role::Organizational};
  std::optional<std::string> linked_patient_id;
  std::uint64_t              registered_at_ms{0};

  static StakeholderIdentity make(PublicKey const &key, Role role,
                                  std::optional<std::string> linked_patient_id = std::nullopt,
                                  std::uint64_t              registered_at_ms  = 0);

  bool operator==(StakeholderIdentity const &) const = default;
};

/// id(16) || public key(32) || role(1) || has_link(1) [|| len || link] || registered_at_ms(8)
Bytes               encode_identity(StakeholderIdentity const &identity);
StakeholderIdentity decode_identity(ByteView bytes);

class RegistryError : public std::runtime_error
{
public:
  enum class Kind
  {
    DuplicateIdentity,
    BadAdminSignature,
    MissingPatientLink,
    InconsistentIdentity,
    UnknownIdentity,
  };

  RegistryError(Kind kind, std::string const &what)
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

std::string to_string(RegistryError::Kind kind);

struct RegistryEntry
{
  StakeholderIdentity identity;
  bool                revoked{false};
};

/// Append-only stakeholder registry. Revocation flips a flag; entries are
/// never removed.
class Registry
{
public:
  Registry() = default;

  /// Genesis-config identities: added without an admin signature.
  static Registry bootstrap(std::vector<StakeholderIdentity> const &identities);

  RegistryEntry const *find(IdentityId const &id) const;
  bool                 is_active(IdentityId const &id) const;
  std::size_t          size() const
  {
    return entries_.size();
  }
  std::vector<RegistryEntry> const &entries() const
  {
    return entries_;
  }

  /// Serialised form; its length never decreases across operations.
  Bytes encode() const;

private:
  friend Registry register_stakeholder(Registry const &, StakeholderIdentity const &,
                                       IdentityId const &, Signature const &);
  friend Registry revoke_stakeholder(Registry const &, IdentityId const &, IdentityId const &,
                                     Signature const &);

  void add(StakeholderIdentity const &identity);

  std::vector<RegistryEntry>          entries_;
  std::map<IdentityId, std::size_t>   index_;
};

/// Adds `identity` if `admin_signature` is a valid signature over
/// encode_identity(identity) by an active Admin `admin_id`.
Registry register_stakeholder(Registry const &registry, StakeholderIdentity const &identity,
                              IdentityId const &admin_id, Signature const &admin_signature);

/// Message an admin signs to revoke `target`.
Bytes revocation_message(IdentityId const &target);

Registry revoke_stakeholder(Registry const &registry, IdentityId const &target,
                            IdentityId const &admin_id, Signature const &admin_signature);

enum class Action : std::uint8_t
{
  AddRecord,
  UpdateRecord,
  ReadRecord,
  ListRecords,
  ReadChain,
  RegisterIdentity,
};

inline constexpr std::array kAllActions{Action::AddRecord,   Action::UpdateRecord,
                                        Action::ReadRecord,  Action::ListRecords,
                                        Action::ReadChain,   Action::RegisterIdentity};

std::string to_string(Action action);

struct AccessDecision
{
  bool        allowed{false};
  std::string rule;
};

/// Policy table:
///   Admin           every action
///   Organizational  AddRecord UpdateRecord ReadRecord ListRecords ReadChain
///   Patient         ReadRecord/UpdateRecord on the linked patient, ReadChain
///                   (filtered to own provenance by the caller)
///   anything else   denied
AccessDecision authorize(Registry const &registry, IdentityId const &actor, Action action,
                         std::optional<std::string> const &resource = std::nullopt);

}  // namespace ledgerehr

template <>
struct std::hash<ledgerehr::IdentityId>
{
  std::size_t operator()(ledgerehr::IdentityId const &id) const noexcept
  {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(v); ++i)
    {
      v = (v << 8) | id.bytes[i];
    }
    return v;
  }
};
