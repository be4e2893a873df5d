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
#include "ledgerehr/transaction.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ledgerehr {

inline constexpr std::uint16_t kBlockVersion = 1;

enum class ChainMode : std::uint8_t
{
  Consortium,
  PowDemo,
};

std::string              to_string(ChainMode mode);
std::optional<ChainMode> chain_mode_from_string(std::string_view s);

/// Encoded as version(2) height(8) prev_hash(32) timestamp_ms(8) body_root(32)
/// target(32) nonce(8) proposer_id(16), all big-endian: 138 bytes.
struct BlockHeader
{
  std::uint16_t version{kBlockVersion};
  std::uint64_t height{0};
  Hash32        prev_hash;
  std::uint64_t timestamp_ms{0};
  Hash32        body_root;
  Hash32        target;
  std::uint64_t nonce{0};
  IdentityId    proposer_id;

  bool operator==(BlockHeader const &) const = default;
};

inline constexpr std::size_t kHeaderSize = 2 + 8 + 32 + 8 + 32 + 32 + 8 + 16;

struct CommitSignature
{
  IdentityId validator_id;
  Signature  signature;

  bool operator==(CommitSignature const &) const = default;
};

struct Block
{
  BlockHeader                  header;
  std::vector<Transaction>     transactions;
  std::vector<CommitSignature> commit_signatures;

  bool operator==(Block const &) const = default;
};

/// Target used in consortium mode: 32 bytes of 0xff, so every hash passes.
Hash32 consortium_target();

/// Target with `difficulty_bits` leading zero bits followed by ones.
Hash32 pow_target(unsigned difficulty_bits);

Bytes       encode_header(BlockHeader const &header);
BlockHeader decode_header(ByteView bytes);
Hash32      block_hash(BlockHeader const &header);

/// header || u32 tx count || (u32 len || tx)* || u32 sig count || (id || sig)*
Bytes encode_block(Block const &block);
Block decode_block(ByteView bytes);

/// Header and transactions without the commit certificate. Two validators
/// that agree on a block agree on these bytes; their certificates may carry
/// different (equally valid) signer subsets.
Bytes encode_block_content(Block const &block);

std::vector<Bytes> transaction_leaves(std::vector<Transaction> const &txs);
Hash32             body_root_of(std::vector<Transaction> const &txs);

/// Height 0, zero prev_hash, no transactions, body root committing to the
/// length-prefixed network name.
Block make_genesis(std::string_view network_name, std::uint64_t genesis_time_ms);

/// Returns a rejection reason, or nullopt when the transaction is acceptable.
using TxCheck = std::function<std::optional<std::string>(Transaction const &)>;

class BlockError : public std::runtime_error
{
public:
  enum class Kind
  {
    EmptyBlock,
    StaleTimestamp,
    InvalidTransaction,
  };

  BlockError(Kind kind, std::string const &what, std::optional<Hash32> tx = std::nullopt)
    : std::runtime_error(what)
    , kind_(kind)
    , tx_hash_(tx)
  {}

  Kind kind() const noexcept
  {
    return kind_;
  }
  std::optional<Hash32> const &tx_hash() const noexcept
  {
    return tx_hash_;
  }

private:
  Kind                  kind_;
  std::optional<Hash32> tx_hash_;
};

/// Drafts the child of `parent`; commit signatures are left empty.
Block assemble_block(Block const &parent, std::vector<Transaction> txs, std::uint64_t timestamp_ms,
                     IdentityId const &proposer, TxCheck const &check,
                     Hash32 const &target = consortium_target());

/// Nonce search for pow-demo mode. Returns false if no nonce below
/// `max_iterations` satisfies block_hash <= target.
bool mine_block(BlockHeader &header, std::uint64_t max_iterations = 1u << 24);

/// Everything validate_block needs beyond the two blocks.
struct ChainRules
{
  ChainMode                        mode{ChainMode::Consortium};
  std::size_t                      quorum{1};
  std::map<IdentityId, PublicKey>  validators;
  Hash32                           genesis_hash;
  Hash32                           pow_target;
  std::shared_ptr<VerifyCache>     verify_cache;

  /// quorum = floor(N/2) + 1 for the given validator keys.
  static ChainRules consortium(std::vector<PublicKey> const &validator_keys,
                               Hash32 const &genesis_hash);

  /// Same rules with the commit-certificate checks switched off, for drafts.
  ChainRules without_commit() const;

  bool verify(PublicKey const &key, ByteView message, Signature const &sig) const;
};

enum class BlockRule
{
  Codec,
  Genesis,
  Version,
  Height,
  Linkage,
  Timestamp,
  EmptyBody,
  BodyRoot,
  DuplicateTransaction,
  Target,
  UnknownProposer,
  UnknownSigner,
  DuplicateSigner,
  BadCommitSignature,
  InsufficientQuorum,
};

std::string to_string(BlockRule rule);

struct BlockViolation
{
  BlockRule   rule;
  std::string detail;
};

struct ValidationReport
{
  std::vector<BlockViolation> violations;

  bool ok() const
  {
    return violations.empty();
  }
  bool        has(BlockRule rule) const;
  std::string summary() const;
};

/// Lists every rule `candidate` breaks as the child of `parent`.
ValidationReport validate_block(Block const &parent, Block const &candidate,
                                ChainRules const &rules);

/// Committed chain. Blocks are shared immutable values, so copying a
/// ChainState is a cheap snapshot.
class ChainState
{
public:
  explicit ChainState(Block genesis);

  std::uint64_t height() const
  {
    return blocks_.size() - 1;
  }
  Hash32 const &tip_hash() const
  {
    return tip_hash_;
  }
  Block const &tip() const
  {
    return *blocks_.back();
  }
  Block const &at(std::uint64_t height) const
  {
    return *blocks_.at(height);
  }
  std::size_t size() const
  {
    return blocks_.size();
  }
  std::vector<std::shared_ptr<Block const>> const &blocks() const
  {
    return blocks_;
  }

  /// Structural append with no validation; used by decoders and tests.
  void push_unchecked(Block block);

private:
  std::vector<std::shared_ptr<Block const>> blocks_;
  Hash32                                    tip_hash_;
};

class ValidationFailed : public std::runtime_error
{
public:
  explicit ValidationFailed(ValidationReport report)
    : std::runtime_error("block validation failed: " + report.summary())
    , report_(std::move(report))
  {}

  ValidationReport const &report() const noexcept
  {
    return report_;
  }

private:
  ValidationReport report_;
};

/// Returns `chain` extended by `block`; throws ValidationFailed.
ChainState append_block(ChainState const &chain, Block block, ChainRules const &rules);

struct AuditReport
{
  bool                         ok{true};
  std::uint64_t                height{0};  // highest block examined
  std::optional<std::uint64_t> failed_height;
  std::string                  reason;
};

/// Re-validates the chain from genesis and stops at the first failure.
AuditReport verify_chain(ChainState const &chain, ChainRules const &rules);

class StorageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// One log frame: u32 big-endian length || encode_block bytes.
Bytes frame_block(Block const &block);

struct LogFault
{
  std::uint64_t height{0};  // index of the frame that failed to decode
  std::size_t   offset{0};
  std::string   message;
};

struct LogReplay
{
  std::vector<Block>       blocks;
  std::vector<std::size_t> frame_offsets;
  std::optional<LogFault>  fault;
};

LogReplay replay_log(ByteView log);

/// Replays the frames then runs verify_chain. A framing or codec fault is
/// reported at the height of the frame that failed.
AuditReport verify_log(ByteView log, ChainRules const &rules);

/// Append-only block log file.
class BlockLog
{
public:
  explicit BlockLog(std::filesystem::path path);

  void append(Block const &block);
  Bytes read_all() const;
  bool  exists() const;

  std::filesystem::path const &path() const
  {
    return path_;
  }

private:
  std::filesystem::path path_;
};

Bytes read_file(std::filesystem::path const &path);

/// XORs `mask` into the byte at `offset` inside the encoded block of frame
/// `height` (offset 0 is the first byte after the length prefix).
void tamper_log(std::filesystem::path const &path, std::uint64_t height, std::size_t offset,
                std::uint8_t mask = 0xff);

/// The single-writer commit pipeline: validates, persists, then publishes.
class Ledger
{
public:
  Ledger(ChainRules rules, Block genesis, std::optional<std::filesystem::path> log_path);

  /// Replays an existing log (verifying it) or starts a fresh one.
  static Ledger open(ChainRules rules, Block genesis, std::filesystem::path const &log_path);

  ChainState const &chain() const
  {
    return chain_;
  }
  ChainRules const &rules() const
  {
    return rules_;
  }

  void append(Block block);

private:
  ChainRules              rules_;
  ChainState              chain_;
  std::optional<BlockLog> log_;
};

}  // namespace ledgerehr
