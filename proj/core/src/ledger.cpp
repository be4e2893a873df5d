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

#include "ledgerehr/ledger.hpp"

#include "ledgerehr/merkle.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ledgerehr {

std::string to_string(ChainMode mode)
{
  return mode == ChainMode::Consortium ? "consortium" : "pow-demo";
}

std::optional<ChainMode> chain_mode_from_string(std::string_view s)
{
  if (s == "consortium")
  {
    return ChainMode::Consortium;
  }
  if (s == "pow-demo")
  {
    return ChainMode::PowDemo;
  }
  return std::nullopt;
}

Hash32 consortium_target()
{
  return Hash32::filled(0xff);
}

Hash32 pow_target(unsigned difficulty_bits)
{
  Hash32 t = Hash32::filled(0xff);
  for (unsigned bit = 0; bit < difficulty_bits && bit < 256; ++bit)
  {
    t.bytes[bit / 8] &= static_cast<std::uint8_t>(~(0x80u >> (bit % 8)));
  }
  return t;
}

Bytes encode_header(BlockHeader const &h)
{
  ByteWriter w;
  w.u16(h.version)
      .u64(h.height)
      .fixed(h.prev_hash.bytes)
      .u64(h.timestamp_ms)
      .fixed(h.body_root.bytes)
      .fixed(h.target.bytes)
      .u64(h.nonce)
      .fixed(h.proposer_id.bytes);
  return std::move(w).take();
}

namespace {

BlockHeader read_header(ByteReader &r)
{
  BlockHeader h;
  h.version           = r.u16();
  h.height            = r.u64();
  h.prev_hash.bytes   = r.fixed<32>();
  h.timestamp_ms      = r.u64();
  h.body_root.bytes   = r.fixed<32>();
  h.target.bytes      = r.fixed<32>();
  h.nonce             = r.u64();
  h.proposer_id.bytes = r.fixed<IdentityId::kSize>();
  return h;
}

void write_transactions(ByteWriter &w, std::vector<Transaction> const &txs)
{
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (auto const &tx : txs)
  {
    w.var(encode_transaction(tx));
  }
}

}  // namespace

BlockHeader decode_header(ByteView bytes)
{
  ByteReader r(bytes);
  auto       h = read_header(r);
  r.expect_end("block header");
  return h;
}

Hash32 block_hash(BlockHeader const &header)
{
  return sha256(encode_header(header));
}

Bytes encode_block(Block const &block)
{
  ByteWriter w;
  w.raw(encode_header(block.header));
  write_transactions(w, block.transactions);
  w.u32(static_cast<std::uint32_t>(block.commit_signatures.size()));
  for (auto const &cs : block.commit_signatures)
  {
    w.fixed(cs.validator_id.bytes).fixed(cs.signature.bytes);
  }
  return std::move(w).take();
}

Bytes encode_block_content(Block const &block)
{
  ByteWriter w;
  w.raw(encode_header(block.header));
  write_transactions(w, block.transactions);
  return std::move(w).take();
}

Block decode_block(ByteView bytes)
{
  if (bytes.empty())
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "block: empty input");
  }
  ByteReader r(bytes);
  Block      b;
  b.header      = read_header(r);
  auto tx_count = r.u32();
  // every transaction needs at least its fixed-size fields
  if (tx_count > r.remaining() / (4 + 1 + 4 + 16 + 8 + 64))
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "block: transaction count exceeds input");
  }
  b.transactions.reserve(tx_count);
  for (std::uint32_t i = 0; i < tx_count; ++i)
  {
    b.transactions.push_back(decode_transaction(r.var()));
  }
  auto sig_count = r.u32();
  if (sig_count > r.remaining() / (IdentityId::kSize + Signature::kSize))
  {
    throw DecodeError(DecodeError::Kind::MalformedFrame, "block: signature count exceeds input");
  }
  b.commit_signatures.reserve(sig_count);
  for (std::uint32_t i = 0; i < sig_count; ++i)
  {
    CommitSignature cs;
    cs.validator_id.bytes = r.fixed<IdentityId::kSize>();
    cs.signature.bytes    = r.fixed<Signature::kSize>();
    b.commit_signatures.push_back(cs);
  }
  r.expect_end("block");
  return b;
}

std::vector<Bytes> transaction_leaves(std::vector<Transaction> const &txs)
{
  std::vector<Bytes> leaves;
  leaves.reserve(txs.size());
  for (auto const &tx : txs)
  {
    leaves.push_back(encode_transaction(tx));
  }
  return leaves;
}

Hash32 body_root_of(std::vector<Transaction> const &txs)
{
  return merkle::build_root(transaction_leaves(txs));
}

Block make_genesis(std::string_view network_name, std::uint64_t genesis_time_ms)
{
  Block g;
  g.header.version      = kBlockVersion;
  g.header.height       = 0;
  g.header.prev_hash    = Hash32::zero();
  g.header.timestamp_ms = genesis_time_ms;
  ByteWriter name;
  name.var(network_name);
  g.header.body_root = merkle::build_root({name.bytes()});
  g.header.target    = consortium_target();
  g.header.nonce     = 0;
  return g;
}

Block assemble_block(Block const &parent, std::vector<Transaction> txs, std::uint64_t timestamp_ms,
                     IdentityId const &proposer, TxCheck const &check, Hash32 const &target)
{
  if (txs.empty())
  {
    throw BlockError(BlockError::Kind::EmptyBlock, "block must contain at least one transaction");
  }
  if (timestamp_ms < parent.header.timestamp_ms)
  {
    throw BlockError(BlockError::Kind::StaleTimestamp,
                     "timestamp " + std::to_string(timestamp_ms) + " precedes parent timestamp " +
                         std::to_string(parent.header.timestamp_ms));
  }
  for (auto const &tx : txs)
  {
    if (check)
    {
      if (auto reason = check(tx))
      {
        throw BlockError(BlockError::Kind::InvalidTransaction,
                         "invalid transaction " + tx.tx_hash.hex() + ": " + *reason, tx.tx_hash);
      }
    }
  }
  Block b;
  b.header.version      = kBlockVersion;
  b.header.height       = parent.header.height + 1;
  b.header.prev_hash    = block_hash(parent.header);
  b.header.timestamp_ms = timestamp_ms;
  b.header.body_root    = body_root_of(txs);
  b.header.target       = target;
  b.header.nonce        = 0;
  b.header.proposer_id  = proposer;
  b.transactions        = std::move(txs);
  return b;
}

bool mine_block(BlockHeader &header, std::uint64_t max_iterations)
{
  for (std::uint64_t nonce = 0; nonce < max_iterations; ++nonce)
  {
    header.nonce = nonce;
    if (block_hash(header) <= header.target)
    {
      return true;
    }
  }
  return false;
}

ChainRules ChainRules::consortium(std::vector<PublicKey> const &validator_keys,
                                  Hash32 const &genesis_hash)
{
  ChainRules r;
  r.mode = ChainMode::Consortium;
  for (auto const &k : validator_keys)
  {
    r.validators.emplace(identity_of(k), k);
  }
  r.quorum       = r.validators.size() / 2 + 1;
  r.genesis_hash = genesis_hash;
  r.pow_target   = consortium_target();
  return r;
}

ChainRules ChainRules::without_commit() const
{
  ChainRules r = *this;
  r.quorum     = 0;
  return r;
}

bool ChainRules::verify(PublicKey const &key, ByteView message, Signature const &sig) const
{
  return verify_cache ? verify_cache->verify(key, message, sig) : verify_payload(key, message, sig);
}

std::string to_string(BlockRule rule)
{
  switch (rule)
  {
  case BlockRule::Codec:
    return "Codec";
  case BlockRule::Genesis:
    return "Genesis";
  case BlockRule::Version:
    return "Version";
  case BlockRule::Height:
    return "Height";
  case BlockRule::Linkage:
    return "Linkage";
  case BlockRule::Timestamp:
    return "Timestamp";
  case BlockRule::EmptyBody:
    return "EmptyBody";
  case BlockRule::BodyRoot:
    return "BodyRoot";
  case BlockRule::DuplicateTransaction:
    return "DuplicateTransaction";
  case BlockRule::Target:
    return "Target";
  case BlockRule::UnknownProposer:
    return "UnknownProposer";
  case BlockRule::UnknownSigner:
    return "UnknownSigner";
  case BlockRule::DuplicateSigner:
    return "DuplicateSigner";
  case BlockRule::BadCommitSignature:
    return "BadCommitSignature";
  case BlockRule::InsufficientQuorum:
    return "InsufficientQuorum";
  }
  return "Unknown";
}

bool ValidationReport::has(BlockRule rule) const
{
  return std::any_of(violations.begin(), violations.end(),
                     [rule](auto const &v) { return v.rule == rule; });
}

std::string ValidationReport::summary() const
{
  std::string out;
  for (auto const &v : violations)
  {
    if (!out.empty())
    {
      out += "; ";
    }
    out += to_string(v.rule) + ": " + v.detail;
  }
  return out;
}

ValidationReport validate_block(Block const &parent, Block const &candidate,
                                ChainRules const &rules)
{
  ValidationReport report;
  auto             fail = [&](BlockRule rule, std::string detail) {
    report.violations.push_back({rule, std::move(detail)});
  };
  auto const &h = candidate.header;

  if (h.version != kBlockVersion)
  {
    fail(BlockRule::Version, "unsupported version " + std::to_string(h.version));
  }
  if (h.height != parent.header.height + 1)
  {
    fail(BlockRule::Height, "expected height " + std::to_string(parent.header.height + 1) +
                                ", got " + std::to_string(h.height));
  }
  auto parent_hash = block_hash(parent.header);
  if (h.prev_hash != parent_hash)
  {
    fail(BlockRule::Linkage, "prev_hash " + h.prev_hash.hex() + " != parent " + parent_hash.hex());
  }
  if (h.timestamp_ms < parent.header.timestamp_ms)
  {
    fail(BlockRule::Timestamp, "timestamp precedes parent");
  }
  if (candidate.transactions.empty())
  {
    fail(BlockRule::EmptyBody, "no transactions");
  }
  else
  {
    auto root = body_root_of(candidate.transactions);
    if (root != h.body_root)
    {
      fail(BlockRule::BodyRoot, "body_root mismatch: header " + h.body_root.hex() + ", computed " +
                                    root.hex());
    }
    std::set<Hash32> seen;
    for (auto const &tx : candidate.transactions)
    {
      if (!seen.insert(tx.tx_hash).second)
      {
        fail(BlockRule::DuplicateTransaction, tx.tx_hash.hex());
      }
    }
  }

  auto hash = block_hash(h);
  if (rules.mode == ChainMode::Consortium)
  {
    if (h.target != consortium_target())
    {
      fail(BlockRule::Target, "consortium blocks carry the all-ones target");
    }
  }
  else
  {
    if (h.target != rules.pow_target)
    {
      fail(BlockRule::Target, "target differs from configured difficulty");
    }
    else if (hash > h.target)
    {
      fail(BlockRule::Target, "block hash above target");
    }
  }

  if (!rules.validators.empty() && !rules.validators.contains(h.proposer_id))
  {
    fail(BlockRule::UnknownProposer, h.proposer_id.hex());
  }

  if (rules.quorum > 0)
  {
    std::set<IdentityId> signers;
    std::size_t          valid = 0;
    for (auto const &cs : candidate.commit_signatures)
    {
      auto it = rules.validators.find(cs.validator_id);
      if (it == rules.validators.end())
      {
        fail(BlockRule::UnknownSigner, cs.validator_id.hex());
        continue;
      }
      if (!signers.insert(cs.validator_id).second)
      {
        fail(BlockRule::DuplicateSigner, cs.validator_id.hex());
        continue;
      }
      if (!rules.verify(it->second, hash.view(), cs.signature))
      {
        fail(BlockRule::BadCommitSignature, cs.validator_id.hex());
        continue;
      }
      ++valid;
    }
    if (valid < rules.quorum)
    {
      fail(BlockRule::InsufficientQuorum, std::to_string(valid) + " valid signatures, quorum " +
                                              std::to_string(rules.quorum));
    }
  }
  return report;
}

ChainState::ChainState(Block genesis)
{
  tip_hash_ = block_hash(genesis.header);
  blocks_.push_back(std::make_shared<Block const>(std::move(genesis)));
}

void ChainState::push_unchecked(Block block)
{
  tip_hash_ = block_hash(block.header);
  blocks_.push_back(std::make_shared<Block const>(std::move(block)));
}

ChainState append_block(ChainState const &chain, Block block, ChainRules const &rules)
{
  auto report = validate_block(chain.tip(), block, rules);
  if (!report.ok())
  {
    throw ValidationFailed(std::move(report));
  }
  ChainState next = chain;
  next.push_unchecked(std::move(block));
  return next;
}

namespace {

std::optional<std::string> check_genesis(Block const &g, ChainRules const &rules)
{
  if (g.header.height != 0)
  {
    return "genesis height is not 0";
  }
  if (!g.header.prev_hash.is_zero())
  {
    return "genesis prev_hash is not zero";
  }
  if (!g.transactions.empty() || !g.commit_signatures.empty())
  {
    return "genesis carries transactions or signatures";
  }
  if (!rules.genesis_hash.is_zero() && block_hash(g.header) != rules.genesis_hash)
  {
    return "genesis hash " + block_hash(g.header).hex() + " != expected " +
           rules.genesis_hash.hex();
  }
  return std::nullopt;
}

}  // namespace

AuditReport verify_chain(ChainState const &chain, ChainRules const &rules)
{
  AuditReport report;
  if (auto why = check_genesis(chain.at(0), rules))
  {
    report.ok            = false;
    report.failed_height = 0;
    report.reason        = to_string(BlockRule::Genesis) + ": " + *why;
    return report;
  }
  for (std::uint64_t h = 1; h < chain.size(); ++h)
  {
    report.height = h;
    auto v        = validate_block(chain.at(h - 1), chain.at(h), rules);
    if (!v.ok())
    {
      report.ok            = false;
      report.failed_height = h;
      report.reason        = v.summary();
      return report;
    }
  }
  report.height = chain.height();
  return report;
}

Bytes frame_block(Block const &block)
{
  auto       body = encode_block(block);
  ByteWriter w;
  w.var(body);
  return std::move(w).take();
}

LogReplay replay_log(ByteView log)
{
  LogReplay   out;
  std::size_t pos = 0;
  while (pos < log.size())
  {
    std::uint64_t height = out.blocks.size();
    try
    {
      ByteReader r(log.subspan(pos));
      auto       frame = r.var();
      out.blocks.push_back(decode_block(frame));
      out.frame_offsets.push_back(pos);
      pos += 4 + frame.size();
    }
    catch (DecodeError const &e)
    {
      out.fault = LogFault{height, pos, e.what()};
      break;
    }
  }
  return out;
}

AuditReport verify_log(ByteView log, ChainRules const &rules)
{
  auto replay = replay_log(log);
  if (replay.blocks.empty())
  {
    AuditReport r;
    r.ok            = false;
    r.failed_height = 0;
    r.reason        = replay.fault ? "Codec: " + replay.fault->message : "Codec: empty log";
    return r;
  }
  ChainState chain(std::move(replay.blocks.front()));
  for (std::size_t i = 1; i < replay.blocks.size(); ++i)
  {
    chain.push_unchecked(std::move(replay.blocks[i]));
  }
  auto report = verify_chain(chain, rules);
  if (!report.ok)
  {
    return report;
  }
  if (replay.fault)
  {
    report.ok            = false;
    report.failed_height = replay.fault->height;
    report.height        = replay.fault->height;
    report.reason        = "Codec: frame at offset " + std::to_string(replay.fault->offset) + ": " +
                    replay.fault->message;
  }
  return report;
}

BlockLog::BlockLog(std::filesystem::path path)
  : path_(std::move(path))
{}

bool BlockLog::exists() const
{
  return std::filesystem::exists(path_);
}

void BlockLog::append(Block const &block)
{
  auto          frame = frame_block(block);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out)
  {
    throw StorageError("cannot open block log " + path_.string());
  }
  out.write(reinterpret_cast<char const *>(frame.data()), static_cast<std::streamsize>(frame.size()));
  out.flush();
  if (!out)
  {
    throw StorageError("write to block log failed: " + path_.string());
  }
}

Bytes read_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw StorageError("cannot open " + path.string());
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Bytes BlockLog::read_all() const
{
  return read_file(path_);
}

void tamper_log(std::filesystem::path const &path, std::uint64_t height, std::size_t offset,
                std::uint8_t mask)
{
  auto bytes  = read_file(path);
  auto replay = replay_log(bytes);
  if (height >= replay.frame_offsets.size())
  {
    throw StorageError("no decodable frame at height " + std::to_string(height));
  }
  auto        start = replay.frame_offsets[height];
  ByteReader  r(ByteView(bytes).subspan(start));
  std::size_t len = r.u32();
  if (offset >= len)
  {
    throw StorageError("offset " + std::to_string(offset) + " beyond block length " +
                       std::to_string(len));
  }
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!f)
  {
    throw StorageError("cannot open " + path.string() + " for tampering");
  }
  auto pos = static_cast<std::streamoff>(start + 4 + offset);
  f.seekp(pos);
  char c = static_cast<char>(bytes[start + 4 + offset] ^ mask);
  f.write(&c, 1);
  if (!f)
  {
    throw StorageError("tamper write failed");
  }
}

Ledger::Ledger(ChainRules rules, Block genesis, std::optional<std::filesystem::path> log_path)
  : rules_(std::move(rules))
  , chain_(genesis)
{
  if (log_path)
  {
    log_.emplace(*log_path);
    if (!log_->exists())
    {
      log_->append(genesis);
    }
  }
}

Ledger Ledger::open(ChainRules rules, Block genesis, std::filesystem::path const &log_path)
{
  if (!std::filesystem::exists(log_path))
  {
    return Ledger(std::move(rules), std::move(genesis), log_path);
  }
  auto bytes  = read_file(log_path);
  auto report = verify_log(bytes, rules);
  if (!report.ok)
  {
    throw StorageError("block log failed verification at height " +
                       std::to_string(report.failed_height.value_or(0)) + ": " + report.reason);
  }
  auto   replay = replay_log(bytes);
  Ledger ledger(std::move(rules), replay.blocks.front(), std::nullopt);
  if (block_hash(replay.blocks.front().header) != block_hash(genesis.header))
  {
    throw StorageError("block log belongs to a different genesis");
  }
  for (std::size_t i = 1; i < replay.blocks.size(); ++i)
  {
    ledger.chain_.push_unchecked(std::move(replay.blocks[i]));
  }
  ledger.log_.emplace(log_path);
  return ledger;
}

void Ledger::append(Block block)
{
  auto next = append_block(chain_, block, rules_);
  if (log_)
  {
    log_->append(block);
  }
  chain_ = std::move(next);
}

}  // namespace ledgerehr
