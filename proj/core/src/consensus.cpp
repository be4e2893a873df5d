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

#include "ledgerehr/consensus.hpp"

#include <algorithm>

namespace ledgerehr::consensus {
namespace {

constexpr std::uint8_t kTagProposal    = 1;
constexpr std::uint8_t kTagVote        = 2;
constexpr std::uint8_t kTagRoundChange = 3;
constexpr std::uint8_t kTagDecided     = 4;
constexpr std::uint8_t kTagSync        = 5;
constexpr std::uint8_t kTagTxGossip    = 6;

constexpr std::size_t kMaxCatchUpBlocks = 32;

std::string short_hex(Hash32 const &h)
{
  return h.hex().substr(0, 16);
}

void write_round_change_body(ByteWriter &w, RoundChange const &rc)
{
  w.u64(rc.height).u64(rc.round).fixed(rc.sender_id.bytes);
  if (rc.voted_round && rc.voted_block)
  {
    w.u8(1).u64(*rc.voted_round).var(encode_block(*rc.voted_block));
  }
  else
  {
    w.u8(0);
  }
}

}  // namespace

ValidatorSet::ValidatorSet(std::vector<PublicKey> const &keys)
{
  if (keys.empty())
  {
    throw std::invalid_argument("validator set must not be empty");
  }
  for (auto const &k : keys)
  {
    auto id = identity_of(k);
    if (index_of(id))
    {
      throw std::invalid_argument("duplicate validator " + id.hex());
    }
    validators_.push_back({id, k});
  }
}

std::optional<std::size_t> ValidatorSet::index_of(IdentityId const &id) const
{
  for (std::size_t i = 0; i < validators_.size(); ++i)
  {
    if (validators_[i].id == id)
    {
      return i;
    }
  }
  return std::nullopt;
}

PublicKey const *ValidatorSet::key_of(IdentityId const &id) const
{
  auto i = index_of(id);
  return i ? &validators_[*i].key : nullptr;
}

std::vector<PublicKey> ValidatorSet::keys() const
{
  std::vector<PublicKey> out;
  for (auto const &v : validators_)
  {
    out.push_back(v.key);
  }
  return out;
}

IdentityId leader_for(std::uint64_t height, std::uint64_t round, ValidatorSet const &set)
{
  return set.at((height + round) % set.size()).id;
}

std::string message_kind(Message const &m)
{
  struct Visitor
  {
    std::string operator()(Proposal const &) const
    {
      return "proposal";
    }
    std::string operator()(VoteMessage const &) const
    {
      return "vote";
    }
    std::string operator()(RoundChange const &) const
    {
      return "round-change";
    }
    std::string operator()(Decided const &) const
    {
      return "decided";
    }
    std::string operator()(SyncRequest const &) const
    {
      return "sync";
    }
    std::string operator()(TxGossip const &) const
    {
      return "tx";
    }
  };
  return std::visit(Visitor{}, m);
}

Hash32 round_change_digest(RoundChange const &rc)
{
  ByteWriter w;
  w.u8(kTagRoundChange);
  write_round_change_body(w, rc);
  return sha256(w.bytes());
}

Bytes encode_message(Message const &m)
{
  ByteWriter w;
  std::visit(
      [&w](auto const &msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Proposal>)
        {
          w.u8(kTagProposal)
              .u64(msg.height)
              .u64(msg.round)
              .fixed(msg.proposer_id.bytes)
              .var(encode_block(msg.block))
              .fixed(msg.signature.bytes);
        }
        else if constexpr (std::is_same_v<T, VoteMessage>)
        {
          w.u8(kTagVote)
              .u64(msg.height)
              .u64(msg.round)
              .fixed(msg.block_hash.bytes)
              .fixed(msg.voter_id.bytes)
              .fixed(msg.signature.bytes);
        }
        else if constexpr (std::is_same_v<T, RoundChange>)
        {
          w.u8(kTagRoundChange);
          write_round_change_body(w, msg);
          w.fixed(msg.signature.bytes);
        }
        else if constexpr (std::is_same_v<T, Decided>)
        {
          w.u8(kTagDecided).var(encode_block(msg.block));
        }
        else if constexpr (std::is_same_v<T, SyncRequest>)
        {
          w.u8(kTagSync).fixed(msg.sender_id.bytes).u64(msg.from_height);
        }
        else
        {
          w.u8(kTagTxGossip).var(encode_transaction(msg.tx));
        }
      },
      m);
  return std::move(w).take();
}

Message decode_message(ByteView bytes)
{
  ByteReader r(bytes);
  Message    out;
  switch (r.u8())
  {
  case kTagProposal: {
    Proposal p;
    p.height            = r.u64();
    p.round             = r.u64();
    p.proposer_id.bytes = r.fixed<IdentityId::kSize>();
    p.block             = decode_block(r.var());
    p.signature.bytes   = r.fixed<Signature::kSize>();
    out                 = std::move(p);
    break;
  }
  case kTagVote: {
    VoteMessage v;
    v.height           = r.u64();
    v.round            = r.u64();
    v.block_hash.bytes = r.fixed<32>();
    v.voter_id.bytes   = r.fixed<IdentityId::kSize>();
    v.signature.bytes  = r.fixed<Signature::kSize>();
    out                = v;
    break;
  }
  case kTagRoundChange: {
    RoundChange rc;
    rc.height          = r.u64();
    rc.round           = r.u64();
    rc.sender_id.bytes = r.fixed<IdentityId::kSize>();
    auto flag          = r.u8();
    if (flag > 1)
    {
      throw DecodeError(DecodeError::Kind::MalformedFrame, "round-change: bad flag");
    }
    if (flag == 1)
    {
      rc.voted_round = r.u64();
      rc.voted_block = decode_block(r.var());
    }
    rc.signature.bytes = r.fixed<Signature::kSize>();
    out                = std::move(rc);
    break;
  }
  case kTagDecided:
    out = Decided{decode_block(r.var())};
    break;
  case kTagSync: {
    SyncRequest s;
    s.sender_id.bytes = r.fixed<IdentityId::kSize>();
    s.from_height     = r.u64();
    out               = s;
    break;
  }
  case kTagTxGossip:
    out = TxGossip{decode_transaction(r.var())};
    break;
  default:
    throw DecodeError(DecodeError::Kind::MalformedFrame, "message: unknown tag");
  }
  r.expect_end("message");
  return out;
}

Engine::Engine(EngineConfig config, ChainState chain)
  : config_(std::move(config))
  , self_(config_.key.id())
  , chain_(std::move(chain))
{
  if (!config_.validators.index_of(self_))
  {
    throw std::invalid_argument("engine key is not in the validator set");
  }
  height_ = chain_.height() + 1;
  for (auto const &block : chain_.blocks())
  {
    for (auto const &tx : block->transactions)
    {
      committed_.insert(tx.tx_hash);
    }
  }
}

void Engine::log(Tick now, std::string kind, std::string detail)
{
  events_.push_back({now, std::move(kind), std::move(detail)});
}

void Engine::send(std::optional<IdentityId> to, Message message)
{
  outbox_.push_back({to, std::move(message)});
}

Tick Engine::current_timeout() const
{
  Tick t     = config_.base_timeout_ticks;
  auto steps = std::min(consecutive_timeouts_, 30u);
  for (unsigned i = 0; i < steps && t < config_.max_timeout_ticks; ++i)
  {
    t *= 2;
  }
  return std::min(t, config_.max_timeout_ticks);
}

Signature Engine::sign(ByteView message) const
{
  return config_.sign_cache ? config_.sign_cache->sign(config_.key.private_key, message)
                            : sign_payload(config_.key.private_key, message);
}

bool Engine::has_work() const
{
  return !pool_.empty() || !blocks_.empty() || last_vote_.has_value();
}

void Engine::arm_timer(Tick now)
{
  timer_armed_ = true;
  deadline_    = now + current_timeout();
}

void Engine::refresh_timer(Tick now)
{
  if (has_work())
  {
    arm_timer(now);
  }
  else
  {
    timer_armed_ = false;
  }
}

std::optional<std::size_t> Engine::pool_position(Hash32 const &tx_hash) const
{
  auto it = pool_index_.find(tx_hash);
  if (it == pool_index_.end())
  {
    return std::nullopt;
  }
  auto pos = pool_.find(PoolKey{it->second, tx_hash});
  return static_cast<std::size_t>(std::distance(pool_.begin(), pos));
}

bool Engine::submit(Transaction const &tx, Tick now)
{
  if (committed_.contains(tx.tx_hash) || pool_index_.contains(tx.tx_hash))
  {
    return false;
  }
  if (config_.tx_check)
  {
    if (auto reason = config_.tx_check(tx))
    {
      log(now, "tx-rejected", short_hex(tx.tx_hash) + " " + *reason);
      return false;
    }
  }
  pool_.emplace(PoolKey{now, tx.tx_hash}, tx);
  pool_index_.emplace(tx.tx_hash, now);
  if (!timer_armed_)
  {
    arm_timer(now);
  }
  return true;
}

std::optional<std::string> Engine::check_draft(Block const &block) const
{
  auto report = validate_block(chain_.tip(), block, config_.rules.without_commit());
  if (!report.ok())
  {
    return report.summary();
  }
  for (auto const &tx : block.transactions)
  {
    if (committed_.contains(tx.tx_hash))
    {
      return "transaction already committed: " + tx.tx_hash.hex();
    }
    if (config_.tx_check)
    {
      if (auto reason = config_.tx_check(tx))
      {
        return "transaction " + tx.tx_hash.hex() + ": " + *reason;
      }
    }
  }
  return std::nullopt;
}

std::optional<Block> Engine::draft_block(Tick now)
{
  while (!pool_.empty())
  {
    std::vector<Transaction> txs;
    for (auto const &[key, tx] : pool_)
    {
      if (txs.size() >= config_.max_block_txs)
      {
        break;
      }
      txs.push_back(tx);
    }
    auto ts = std::max(config_.time_origin_ms + now * config_.ms_per_tick,
                       chain_.tip().header.timestamp_ms);
    try
    {
      auto target =
          config_.rules.mode == ChainMode::PowDemo ? config_.rules.pow_target : consortium_target();
      auto block = assemble_block(chain_.tip(), std::move(txs), ts, self_, config_.tx_check, target);
      if (config_.rules.mode == ChainMode::PowDemo && !mine_block(block.header))
      {
        log(now, "mine-failed");
        return std::nullopt;
      }
      return block;
    }
    catch (BlockError const &e)
    {
      if (e.kind() != BlockError::Kind::InvalidTransaction || !e.tx_hash())
      {
        log(now, "draft-failed", e.what());
        return std::nullopt;
      }
      // drop the offending transaction and retry with the rest
      auto it = pool_index_.find(*e.tx_hash());
      pool_.erase(PoolKey{it->second, it->first});
      pool_index_.erase(it);
      log(now, "tx-dropped", short_hex(*e.tx_hash()));
    }
  }
  return std::nullopt;
}

std::optional<Proposal> Engine::propose(Tick now)
{
  if (leader_for(height_, round_, config_.validators) != self_)
  {
    throw NotLeader("not the leader for height " + std::to_string(height_) + " round " +
                    std::to_string(round_));
  }
  if (proposed_rounds_.contains(round_))
  {
    return std::nullopt;
  }
  std::optional<Block> block;
  if (round_ > 0)
  {
    auto const &promises = round_changes_[round_];
    if (promises.size() < config_.validators.quorum())
    {
      return std::nullopt;
    }
    std::optional<std::uint64_t> best_round;
    for (auto const &[sender, rc] : promises)
    {
      if (rc.voted_round && rc.voted_block && (!best_round || *rc.voted_round > *best_round))
      {
        best_round = rc.voted_round;
        block      = rc.voted_block;
      }
    }
  }
  if (!block)
  {
    block = draft_block(now);
    if (!block)
    {
      return std::nullopt;
    }
  }
  auto     hash = block_hash(block->header);
  Proposal p{height_, round_, self_, *block, sign(hash.view())};
  proposed_rounds_.insert(round_);
  my_proposal_ = p;
  log(now, "propose", "h=" + std::to_string(height_) + " r=" + std::to_string(round_) + " " +
                          short_hex(hash));
  send(std::nullopt, p);
  blocks_.emplace(hash, *block);
  if (!my_votes_.contains(round_))
  {
    cast_vote(round_, *block, now);
  }
  return p;
}

void Engine::maybe_propose(Tick now)
{
  if (leader_for(height_, round_, config_.validators) == self_ && !proposed_rounds_.contains(round_))
  {
    propose(now);
  }
}

VoteMessage Engine::cast_vote(std::uint64_t round, Block const &block, Tick now)
{
  auto        hash = block_hash(block.header);
  VoteMessage v{height_, round, hash, self_, sign(hash.view())};
  my_votes_[round] = hash;
  if (!last_vote_ || last_vote_->first <= round)
  {
    last_vote_ = {round, hash};
  }
  log(now, "vote", "h=" + std::to_string(height_) + " r=" + std::to_string(round) + " " +
                       short_hex(hash));
  send(std::nullopt, v);
  voter_rounds_[{self_, round}] = hash;
  votes_[{round, hash}][self_]  = v.signature;
  try_commit(round, hash, now);
  return v;
}

std::variant<VoteMessage, Rejection> Engine::handle_proposal(Proposal const &p, Tick now)
{
  auto reject = [&](std::string reason) -> std::variant<VoteMessage, Rejection> {
    log(now, "reject", reason);
    return Rejection{std::move(reason)};
  };
  if (p.height < height_)
  {
    if (config_.validators.index_of(p.proposer_id))
    {
      send_catch_up(p.proposer_id, p.height);
    }
    return reject("stale-height");
  }
  if (p.height > height_)
  {
    if (config_.validators.index_of(p.proposer_id))
    {
      send(p.proposer_id, SyncRequest{self_, height_});
    }
    return reject("future-height");
  }
  if (p.proposer_id != leader_for(p.height, p.round, config_.validators))
  {
    return reject("wrong-leader");
  }
  auto hash = block_hash(p.block.header);
  auto key  = config_.validators.key_of(p.proposer_id);
  if (key == nullptr || !config_.rules.verify(*key, hash.view(), p.signature))
  {
    return reject("bad-signature");
  }
  if (!blocks_.contains(hash))
  {
    if (auto why = check_draft(p.block))
    {
      return reject("invalid-block: " + *why);
    }
    blocks_.emplace(hash, p.block);
  }
  if (p.round < round_)
  {
    try_commit(p.round, hash, now);
    return reject("stale-round");
  }
  if (auto it = my_votes_.find(p.round); it != my_votes_.end())
  {
    if (it->second != hash)
    {
      return reject("already-voted");
    }
    VoteMessage again{height_, p.round, hash, self_,
                      sign(hash.view())};
    send(std::nullopt, again);
    try_commit(p.round, hash, now);
    return again;
  }
  if (p.round > round_)
  {
    round_ = p.round;
    arm_timer(now);
  }
  else if (!timer_armed_)
  {
    arm_timer(now);
  }
  return cast_vote(p.round, blocks_.at(hash), now);
}

std::optional<CommitEvent> Engine::handle_vote(VoteMessage const &v, Tick now)
{
  if (v.height < height_)
  {
    if (config_.validators.index_of(v.voter_id))
    {
      send_catch_up(v.voter_id, v.height);
    }
    return std::nullopt;
  }
  if (v.height > height_)
  {
    if (config_.validators.index_of(v.voter_id))
    {
      send(v.voter_id, SyncRequest{self_, height_});
    }
    return std::nullopt;
  }
  auto key = config_.validators.key_of(v.voter_id);
  if (key == nullptr || !config_.rules.verify(*key, v.block_hash.view(), v.signature))
  {
    log(now, "bad-vote", v.voter_id.hex());
    return std::nullopt;
  }
  auto [it, inserted] = voter_rounds_.emplace(std::pair{v.voter_id, v.round}, v.block_hash);
  if (!inserted && it->second != v.block_hash)
  {
    log(now, "conflicting-vote", v.voter_id.hex() + " r=" + std::to_string(v.round));
    return std::nullopt;
  }
  votes_[{v.round, v.block_hash}].emplace(v.voter_id, v.signature);
  return try_commit(v.round, v.block_hash, now);
}

std::optional<CommitEvent> Engine::try_commit(std::uint64_t round, Hash32 const &hash, Tick now)
{
  auto vit = votes_.find({round, hash});
  if (vit == votes_.end() || vit->second.size() < config_.validators.quorum())
  {
    return std::nullopt;
  }
  auto bit = blocks_.find(hash);
  if (bit == blocks_.end())
  {
    return std::nullopt;  // content not seen yet
  }
  Block sealed = bit->second;
  sealed.commit_signatures.clear();
  for (auto const &validator : config_.validators.validators())
  {
    if (sealed.commit_signatures.size() == config_.validators.quorum())
    {
      break;
    }
    if (auto sig = vit->second.find(validator.id); sig != vit->second.end())
    {
      sealed.commit_signatures.push_back({validator.id, sig->second});
    }
  }
  auto height = height_;
  if (!apply_commit(sealed, round, now))
  {
    return std::nullopt;
  }
  send(std::nullopt, Decided{sealed});
  return CommitEvent{height, round, std::move(sealed)};
}

bool Engine::apply_commit(Block sealed, std::uint64_t round, Tick now)
{
  try
  {
    chain_ = append_block(chain_, sealed, config_.rules);
  }
  catch (ValidationFailed const &e)
  {
    log(now, "commit-invalid", e.what());
    return false;
  }
  for (auto const &tx : sealed.transactions)
  {
    committed_.insert(tx.tx_hash);
    if (auto it = pool_index_.find(tx.tx_hash); it != pool_index_.end())
    {
      pool_.erase(PoolKey{it->second, it->first});
      pool_index_.erase(it);
    }
  }
  auto hash = block_hash(sealed.header);
  log(now, "commit", "h=" + std::to_string(height_) + " r=" + std::to_string(round) + " " +
                         short_hex(hash));
  commits_.push_back({height_, round, std::move(sealed)});

  ++height_;
  round_ = 0;
  blocks_.clear();
  votes_.clear();
  voter_rounds_.clear();
  my_votes_.clear();
  last_vote_.reset();
  round_changes_.clear();
  proposed_rounds_.clear();
  announced_rounds_.clear();
  my_proposal_.reset();
  consecutive_timeouts_ = 0;
  refresh_timer(now);

  if (auto next = future_blocks_.find(height_); next != future_blocks_.end())
  {
    auto block = std::move(next->second);
    future_blocks_.erase(future_blocks_.begin(), std::next(next));
    handle_decided(block, now);
  }
  return true;
}

void Engine::send_catch_up(IdentityId const &to, std::uint64_t from_height)
{
  for (std::uint64_t h = std::max<std::uint64_t>(from_height, 1);
       h < height_ && h < from_height + kMaxCatchUpBlocks; ++h)
  {
    send(to, Decided{chain_.at(h)});
  }
}

void Engine::handle_decided(Block const &block, Tick now)
{
  auto h = block.header.height;
  if (h < height_)
  {
    return;
  }
  if (h > height_)
  {
    future_blocks_.emplace(h, block);
    return;
  }
  // the certificate is not tied to a round; record the local one
  (void)apply_commit(block, round_, now);
}

void Engine::handle_sync_request(SyncRequest const &request, Tick now)
{
  (void)now;
  if (request.from_height < height_ && config_.validators.index_of(request.sender_id))
  {
    send_catch_up(request.sender_id, request.from_height);
  }
}

void Engine::enter_round(std::uint64_t round, Tick now)
{
  round_ = round;
  arm_timer(now);
  if (announced_rounds_.insert(round).second)
  {
    RoundChange rc;
    rc.height    = height_;
    rc.round     = round;
    rc.sender_id = self_;
    if (last_vote_)
    {
      rc.voted_round = last_vote_->first;
      rc.voted_block = blocks_.at(last_vote_->second);
    }
    rc.signature = sign(round_change_digest(rc).view());
    log(now, "round-change", "h=" + std::to_string(height_) + " r=" + std::to_string(round));
    round_changes_[round][self_] = rc;
    send(std::nullopt, rc);
  }
  maybe_propose(now);
}

void Engine::handle_round_change(RoundChange const &rc, Tick now)
{
  auto key = config_.validators.key_of(rc.sender_id);
  if (key == nullptr || !config_.rules.verify(*key, round_change_digest(rc).view(), rc.signature))
  {
    log(now, "bad-round-change", rc.sender_id.hex());
    return;
  }
  if (rc.height < height_)
  {
    send_catch_up(rc.sender_id, rc.height);
    return;
  }
  if (rc.height > height_)
  {
    send(rc.sender_id, SyncRequest{self_, height_});
    return;
  }
  if (rc.round < round_)
  {
    return;
  }
  if (rc.voted_block)
  {
    auto hash = block_hash(rc.voted_block->header);
    if (!blocks_.contains(hash))
    {
      if (check_draft(*rc.voted_block))
      {
        log(now, "bad-round-change", "invalid voted block");
        return;
      }
      blocks_.emplace(hash, *rc.voted_block);
    }
  }
  round_changes_[rc.round].emplace(rc.sender_id, rc);
  if (rc.round > round_)
  {
    enter_round(rc.round, now);
    return;
  }
  maybe_propose(now);
}

RoundState Engine::handle_timeout(std::uint64_t height, std::uint64_t round, Tick now)
{
  if (height != height_ || round != round_)
  {
    return {height_, round_, leader_for(height_, round_, config_.validators), current_timeout(),
            true};
  }
  log(now, "timeout", "h=" + std::to_string(height) + " r=" + std::to_string(round));
  ++consecutive_timeouts_;
  if (config_.discard_vote_on_timeout)
  {
    last_vote_.reset();
  }
  enter_round(round + 1, now);
  return {height_, round_, leader_for(height_, round_, config_.validators), current_timeout(),
          false};
}

void Engine::on_message(Message const &message, Tick now)
{
  std::visit(
      [&](auto const &m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Proposal>)
        {
          handle_proposal(m, now);
        }
        else if constexpr (std::is_same_v<T, VoteMessage>)
        {
          handle_vote(m, now);
        }
        else if constexpr (std::is_same_v<T, RoundChange>)
        {
          handle_round_change(m, now);
        }
        else if constexpr (std::is_same_v<T, Decided>)
        {
          handle_decided(m.block, now);
        }
        else if constexpr (std::is_same_v<T, SyncRequest>)
        {
          handle_sync_request(m, now);
        }
        else
        {
          submit(m.tx, now);
        }
      },
      message);
}

void Engine::tick(Tick now)
{
  if (!timer_armed_ && has_work())
  {
    arm_timer(now);
  }
  if (timer_armed_ && now >= deadline_)
  {
    handle_timeout(height_, round_, now);
  }
  maybe_propose(now);
  if (timer_armed_ && now >= next_resend_)
  {
    if (next_resend_ != 0)
    {
      resend_round(now);
    }
    next_resend_ = now + std::max<Tick>(1, config_.base_timeout_ticks / 2);
  }
  // idle validators poll peers so one that missed commits while down catches up
  if (!has_work() && now >= next_sync_)
  {
    next_sync_ = now + config_.max_timeout_ticks;
    send(std::nullopt, SyncRequest{self_, height_});
  }
}

void Engine::resend_round(Tick now)
{
  bool any = false;
  if (my_proposal_ && my_proposal_->round == round_)
  {
    send(std::nullopt, *my_proposal_);
    any = true;
  }
  if (auto it = my_votes_.find(round_); it != my_votes_.end())
  {
    send(std::nullopt, VoteMessage{height_, round_, it->second, self_, sign(it->second.view())});
    any = true;
  }
  if (auto rcs = round_changes_.find(round_); rcs != round_changes_.end())
  {
    if (auto own = rcs->second.find(self_); own != rcs->second.end())
    {
      send(std::nullopt, own->second);
      any = true;
    }
  }
  if (any)
  {
    log(now, "resend", "h=" + std::to_string(height_) + " r=" + std::to_string(round_));
  }
}

std::vector<Outgoing> Engine::take_outbox()
{
  return std::exchange(outbox_, {});
}

std::vector<CommitEvent> Engine::take_commits()
{
  return std::exchange(commits_, {});
}

std::vector<EngineEvent> Engine::take_events()
{
  return std::exchange(events_, {});
}

Hash32 Engine::state_digest() const
{
  ByteWriter w;
  w.u64(height_).u64(round_).fixed(chain_.tip_hash().bytes);
  w.u32(static_cast<std::uint32_t>(pool_.size()));
  for (auto const &[key, tx] : pool_)
  {
    w.u64(key.arrival).fixed(key.tx_hash.bytes);
  }
  w.u32(static_cast<std::uint32_t>(blocks_.size()));
  for (auto const &[hash, block] : blocks_)
  {
    w.fixed(hash.bytes);
  }
  w.u32(static_cast<std::uint32_t>(votes_.size()));
  for (auto const &[key, voters] : votes_)
  {
    w.u64(key.first).fixed(key.second.bytes).u32(static_cast<std::uint32_t>(voters.size()));
    for (auto const &[voter, sig] : voters)
    {
      w.fixed(voter.bytes);
    }
  }
  w.u32(static_cast<std::uint32_t>(my_votes_.size()));
  for (auto const &[round, hash] : my_votes_)
  {
    w.u64(round).fixed(hash.bytes);
  }
  if (last_vote_)
  {
    w.u8(1).u64(last_vote_->first).fixed(last_vote_->second.bytes);
  }
  else
  {
    w.u8(0);
  }
  for (auto const &[round, senders] : round_changes_)
  {
    w.u64(round).u32(static_cast<std::uint32_t>(senders.size()));
    for (auto const &[sender, rc] : senders)
    {
      w.fixed(sender.bytes).u64(rc.voted_round ? *rc.voted_round + 1 : 0);
      if (rc.voted_block)
      {
        w.fixed(block_hash(rc.voted_block->header).bytes);
      }
    }
  }
  w.u32(static_cast<std::uint32_t>(proposed_rounds_.size()));
  for (auto r : proposed_rounds_)
  {
    w.u64(r);
  }
  w.u32(static_cast<std::uint32_t>(announced_rounds_.size()));
  for (auto r : announced_rounds_)
  {
    w.u64(r);
  }
  w.u8(timer_armed_ ? 1 : 0).u64(deadline_).u32(consecutive_timeouts_).u64(next_sync_);
  w.u32(static_cast<std::uint32_t>(future_blocks_.size()));
  for (auto const &[h, block] : future_blocks_)
  {
    w.u64(h).fixed(block_hash(block.header).bytes);
  }
  return sha256(w.bytes());
}

}  // namespace ledgerehr::consensus
