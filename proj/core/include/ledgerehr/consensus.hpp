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

#include "ledgerehr/identity.hpp"
#include "ledgerehr/ledger.hpp"
#include "ledgerehr/transaction.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

/// Crash-fault-tolerant ordering for a static consortium.
///
/// One decision per height. Round r at height h is led by
/// validators[(h + r) mod N]. A validator votes at most once per round, and
/// never in a round below the highest round it has entered. Leaving a round on
/// timeout broadcasts a RoundChange carrying the validator's last vote at this
/// height; the leader of round r > 0 waits for a quorum of RoundChange(r) and
/// re-proposes the block voted in the highest round among them, if any. A
/// quorum of same-round votes for one block commits it. This is the
/// single-decree Paxos value rule, which keeps commits unique per height under
/// loss, duplication, reordering and crashes.
namespace ledgerehr::consensus {

using Tick = std::uint64_t;

struct Validator
{
  IdentityId id;
  PublicKey  key;
};

class ValidatorSet
{
public:
  ValidatorSet() = default;
  explicit ValidatorSet(std::vector<PublicKey> const &keys);

  std::size_t size() const
  {
    return validators_.size();
  }
  /// floor(N/2) + 1
  std::size_t quorum() const
  {
    return validators_.size() / 2 + 1;
  }
  Validator const &at(std::size_t i) const
  {
    return validators_.at(i);
  }
  std::vector<Validator> const &validators() const
  {
    return validators_;
  }

  std::optional<std::size_t> index_of(IdentityId const &id) const;
  PublicKey const           *key_of(IdentityId const &id) const;
  std::vector<PublicKey>     keys() const;

private:
  std::vector<Validator> validators_;
};

/// validators[(height + round) mod N]
IdentityId leader_for(std::uint64_t height, std::uint64_t round, ValidatorSet const &set);

struct Proposal
{
  std::uint64_t height{0};
  std::uint64_t round{0};
  IdentityId    proposer_id;
  Block         block;
  Signature     signature;  // over block_hash(block.header)

  bool operator==(Proposal const &) const = default;
};

struct VoteMessage
{
  std::uint64_t height{0};
  std::uint64_t round{0};
  Hash32        block_hash;
  IdentityId    voter_id;
  Signature     signature;  // over block_hash; doubles as the commit signature

  bool operator==(VoteMessage const &) const = default;
};

/// Sent on entering round `round`: a promise not to vote below it, plus the
/// sender's highest-round vote at this height.
struct RoundChange
{
  std::uint64_t                height{0};
  std::uint64_t                round{0};
  IdentityId                   sender_id;
  std::optional<std::uint64_t> voted_round;
  std::optional<Block>         voted_block;
  Signature                    signature;

  bool operator==(RoundChange const &) const = default;
};

/// A sealed block with its commit certificate, for validators that fell behind.
struct Decided
{
  Block block;

  bool operator==(Decided const &) const = default;
};

struct SyncRequest
{
  IdentityId    sender_id;
  std::uint64_t from_height{0};

  bool operator==(SyncRequest const &) const = default;
};

/// Forwards a client transaction to the other validators' pools.
struct TxGossip
{
  Transaction tx;

  bool operator==(TxGossip const &) const = default;
};

using Message = std::variant<Proposal, VoteMessage, RoundChange, Decided, SyncRequest, TxGossip>;

std::string message_kind(Message const &m);

/// u8 tag || fields, big-endian, blocks and transactions length-prefixed.
Bytes   encode_message(Message const &m);
Message decode_message(ByteView bytes);

Hash32 round_change_digest(RoundChange const &rc);

struct Outgoing
{
  std::optional<IdentityId> to;  // nullopt: every other validator
  Message                   message;
};

struct CommitEvent
{
  std::uint64_t height{0};
  std::uint64_t round{0};
  Block         block;
};

struct Rejection
{
  std::string reason;
};

struct RoundState
{
  std::uint64_t height{0};
  std::uint64_t round{0};
  IdentityId    leader;
  Tick          timeout_ticks{0};
  bool          stale{false};
};

struct EngineEvent
{
  Tick        tick{0};
  std::string kind;
  std::string detail;
};

class ConsensusError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

class NotLeader : public ConsensusError
{
public:
  using ConsensusError::ConsensusError;
};

struct EngineConfig
{
  KeyPair       key;
  ValidatorSet  validators;
  ChainRules    rules;
  std::size_t   max_block_txs{16};
  Tick          base_timeout_ticks{10};
  Tick          max_timeout_ticks{160};
  std::uint64_t time_origin_ms{0};
  std::uint64_t ms_per_tick{1};
  TxCheck       tx_check;
  /// Optional; shared by engines that replay the same messages.
  std::shared_ptr<SignCache> sign_cache;
  /// Forget the own vote when leaving a round on timeout, so round changes
  /// carry nothing forward. Unsafe under message loss; only the model
  /// checker's negative control turns it on.
  bool discard_vote_on_timeout{false};
};

/// Deterministic single-threaded state machine. Inputs arrive through the
/// handle_* methods and tick(); outputs are drained with take_outbox(),
/// take_commits() and take_events().
class Engine
{
public:
  Engine(EngineConfig config, ChainState chain);

  /// Adds a transaction to the pool. False if already pooled, already
  /// committed, or rejected by the transaction check.
  bool submit(Transaction const &tx, Tick now);

  /// Drafts and broadcasts a proposal for the current (height, round).
  /// Throws NotLeader. Returns nullopt when there is nothing to propose yet
  /// (empty pool, already proposed, or round-change quorum still missing).
  std::optional<Proposal> propose(Tick now);

  std::variant<VoteMessage, Rejection> handle_proposal(Proposal const &proposal, Tick now);
  std::optional<CommitEvent>           handle_vote(VoteMessage const &vote, Tick now);
  RoundState handle_timeout(std::uint64_t height, std::uint64_t round, Tick now);
  void       handle_round_change(RoundChange const &rc, Tick now);
  void       handle_decided(Block const &block, Tick now);
  void       handle_sync_request(SyncRequest const &request, Tick now);

  void on_message(Message const &message, Tick now);

  /// Fires an expired timer and lets the leader propose. Every
  /// base_timeout_ticks / 2 the validator re-broadcasts its own proposal, vote
  /// and round change for the current round, so a lost message costs one
  /// resend interval instead of a round. An idle validator broadcasts a
  /// SyncRequest every max_timeout_ticks.
  void tick(Tick now);

  std::vector<Outgoing>    take_outbox();
  std::vector<CommitEvent> take_commits();
  std::vector<EngineEvent> take_events();

  IdentityId const &id() const
  {
    return self_;
  }
  std::uint64_t height() const
  {
    return height_;
  }
  std::uint64_t round() const
  {
    return round_;
  }
  ChainState const &chain() const
  {
    return chain_;
  }
  EngineConfig const &config() const
  {
    return config_;
  }
  std::size_t pool_size() const
  {
    return pool_.size();
  }
  std::optional<std::size_t> pool_position(Hash32 const &tx_hash) const;
  bool                       is_committed(Hash32 const &tx_hash) const
  {
    return committed_.contains(tx_hash);
  }
  bool timer_armed() const
  {
    return timer_armed_;
  }
  Tick timer_deadline() const
  {
    return deadline_;
  }
  Tick current_timeout() const;

  /// Digest over the full protocol state, for reproducibility checks.
  Hash32 state_digest() const;

private:
  using VoteKey = std::pair<std::uint64_t, Hash32>;  // (round, block hash)

  struct PoolKey
  {
    Tick   arrival;
    Hash32 tx_hash;

    auto operator<=>(PoolKey const &) const = default;
  };

  void      log(Tick now, std::string kind, std::string detail = {});
  Signature sign(ByteView message) const;
  void send(std::optional<IdentityId> to, Message message);

  bool                       has_work() const;
  void                       arm_timer(Tick now);
  void                       refresh_timer(Tick now);
  void                       enter_round(std::uint64_t round, Tick now);
  void                       maybe_propose(Tick now);
  std::optional<std::string> check_draft(Block const &block) const;
  std::optional<Block>       draft_block(Tick now);
  VoteMessage                cast_vote(std::uint64_t round, Block const &block, Tick now);
  std::optional<CommitEvent> try_commit(std::uint64_t round, Hash32 const &hash, Tick now);
  bool                       apply_commit(Block sealed, std::uint64_t round, Tick now);
  void                       send_catch_up(IdentityId const &to, std::uint64_t from_height);
  void                       resend_round(Tick now);

  EngineConfig config_;
  IdentityId   self_;
  ChainState   chain_;

  std::uint64_t height_{1};
  std::uint64_t round_{0};

  std::map<PoolKey, Transaction> pool_;
  std::map<Hash32, Tick>         pool_index_;
  std::set<Hash32>               committed_;

  // per-height state
  std::map<Hash32, Block>                                   blocks_;
  std::map<VoteKey, std::map<IdentityId, Signature>>        votes_;
  std::map<std::pair<IdentityId, std::uint64_t>, Hash32>    voter_rounds_;
  std::map<std::uint64_t, Hash32>                           my_votes_;
  std::optional<std::pair<std::uint64_t, Hash32>>           last_vote_;
  std::map<std::uint64_t, std::map<IdentityId, RoundChange>> round_changes_;
  std::set<std::uint64_t>                                   proposed_rounds_;
  std::set<std::uint64_t>                                   announced_rounds_;
  std::optional<Proposal>                                   my_proposal_;

  std::map<std::uint64_t, Block> future_blocks_;

  bool     timer_armed_{false};
  Tick     deadline_{0};
  unsigned consecutive_timeouts_{0};
  Tick     next_sync_{0};
  Tick     next_resend_{0};

  std::vector<Outgoing>    outbox_;
  std::vector<CommitEvent> commits_;
  std::vector<EngineEvent> events_;
};

}  // namespace ledgerehr::consensus
