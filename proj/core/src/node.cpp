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

#include "ledgerehr/node.hpp"

#include "ledgerehr/merkle.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ledgerehr {

using nlohmann::json;

namespace {

using consensus::Tick;

// Malformed request input; answered with 400.
class BadRequest : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

ApiResponse reply(int status, json const &body)
{
  return {status, "application/json", body.dump()};
}

ApiResponse error(int status, std::string const &code, std::string const &reason)
{
  return reply(status, {{"error", code}, {"reason", reason}});
}

std::optional<std::uint64_t> parse_u64(std::string_view s)
{
  if (s.empty() || s.size() > 20)
  {
    return std::nullopt;
  }
  std::uint64_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
  {
    return std::nullopt;
  }
  return v;
}

std::string header(ApiRequest const &req, std::string const &name)
{
  auto it = req.headers.find(name);
  return it == req.headers.end() ? std::string{} : it->second;
}

template <typename T>
std::optional<T> parse_hex(std::string const &s)
{
  try
  {
    return T::from_hex(s);
  }
  catch (std::exception const &)
  {
    return std::nullopt;
  }
}

json identity_json(BootstrapIdentity const &id)
{
  json j{{"public_key", id.public_key.hex()}, {"role", to_string(id.role)}};
  if (id.linked_patient_id)
  {
    j["linked_patient_id"] = *id.linked_patient_id;
  }
  return j;
}

BootstrapIdentity identity_from_json(json const &j)
{
  BootstrapIdentity id;
  id.public_key = PublicKey::from_hex(j.at("public_key").get<std::string>());
  auto role     = role_from_string(j.at("role").get<std::string>());
  if (!role)
  {
    throw ConfigError("unknown role " + j.at("role").get<std::string>());
  }
  id.role = *role;
  if (j.contains("linked_patient_id"))
  {
    id.linked_patient_id = j.at("linked_patient_id").get<std::string>();
  }
  return id;
}

std::optional<std::string> patient_of(Transaction const &tx)
{
  if (tx.op_kind == OpKind::RegisterIdentity)
  {
    return std::nullopt;
  }
  try
  {
    return decode_record(tx.payload).patient_id;
  }
  catch (DecodeError const &)
  {
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

NodeConfig node_config_from_json(std::string const &text)
{
  try
  {
    auto       j = json::parse(text);
    NodeConfig c;
    c.network_name    = j.value("network_name", c.network_name);
    c.genesis_time_ms = j.value("genesis_time_ms", c.genesis_time_ms);
    for (auto const &v : j.at("validators"))
    {
      c.validators.push_back(
          {PublicKey::from_hex(v.at("public_key").get<std::string>()), v.value("url", "")});
    }
    for (auto const &i : j.value("identities", json::array()))
    {
      c.identities.push_back(identity_from_json(i));
    }
    c.key_path = j.value("key_path", "");
    c.data_dir = j.value("data_dir", "");
    if (j.contains("listen_address"))
    {
      auto addr  = j.at("listen_address").get<std::string>();
      auto colon = addr.rfind(':');
      auto port  = colon == std::string::npos ? std::nullopt : parse_u64(addr.substr(colon + 1));
      if (!port || *port > 65535)
      {
        throw ConfigError("listen_address must be host:port");
      }
      c.listen_host = addr.substr(0, colon);
      c.listen_port = static_cast<int>(*port);
    }
    auto mode = chain_mode_from_string(j.value("mode", "consortium"));
    if (!mode)
    {
      throw ConfigError("mode must be consortium or pow-demo");
    }
    c.mode                = *mode;
    c.pow_difficulty_bits = j.value("pow_difficulty_bits", c.pow_difficulty_bits);
    c.max_block_txs       = j.value("max_block_txs", c.max_block_txs);
    if (j.contains("timeouts"))
    {
      auto const &t        = j.at("timeouts");
      c.base_timeout_ticks = t.value("base_ticks", c.base_timeout_ticks);
      c.max_timeout_ticks  = t.value("max_ticks", c.max_timeout_ticks);
      c.tick_ms            = t.value("tick_ms", c.tick_ms);
    }
    if (c.validators.empty())
    {
      throw ConfigError("validators must not be empty");
    }
    if (c.tick_ms == 0 || c.base_timeout_ticks == 0 || c.max_timeout_ticks < c.base_timeout_ticks)
    {
      throw ConfigError("timeouts: need tick_ms > 0 and 0 < base_ticks <= max_ticks");
    }
    if (c.max_block_txs == 0)
    {
      throw ConfigError("max_block_txs must be positive");
    }
    return c;
  }
  catch (ConfigError const &)
  {
    throw;
  }
  catch (std::exception const &e)
  {
    throw ConfigError(std::string("bad node config: ") + e.what());
  }
}

std::string node_config_to_json(NodeConfig const &c)
{
  json validators = json::array();
  for (auto const &v : c.validators)
  {
    validators.push_back({{"public_key", v.public_key.hex()}, {"url", v.url}});
  }
  json identities = json::array();
  for (auto const &i : c.identities)
  {
    identities.push_back(identity_json(i));
  }
  json j{{"network_name", c.network_name},
         {"genesis_time_ms", c.genesis_time_ms},
         {"validators", validators},
         {"identities", identities},
         {"key_path", c.key_path.string()},
         {"listen_address", c.listen_host + ":" + std::to_string(c.listen_port)},
         {"data_dir", c.data_dir.string()},
         {"mode", to_string(c.mode)},
         {"pow_difficulty_bits", c.pow_difficulty_bits},
         {"max_block_txs", c.max_block_txs},
         {"timeouts",
          {{"base_ticks", c.base_timeout_ticks},
           {"max_ticks", c.max_timeout_ticks},
           {"tick_ms", c.tick_ms}}}};
  return j.dump(2);
}

NodeConfig load_node_config(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot read config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  auto c    = node_config_from_json(ss.str());
  auto base = path.parent_path();
  if (!c.key_path.empty() && c.key_path.is_relative())
  {
    c.key_path = base / c.key_path;
  }
  if (!c.data_dir.empty() && c.data_dir.is_relative())
  {
    c.data_dir = base / c.data_dir;
  }
  return c;
}

ChainDescriptor descriptor_of(NodeConfig const &c)
{
  ChainDescriptor d;
  d.network_name        = c.network_name;
  d.genesis_time_ms     = c.genesis_time_ms;
  d.mode                = c.mode;
  d.pow_difficulty_bits = c.mode == ChainMode::PowDemo ? c.pow_difficulty_bits : 0;
  for (auto const &v : c.validators)
  {
    d.validators.push_back(v.public_key);
  }
  d.identities   = c.identities;
  d.genesis_hash = block_hash(genesis_of(d).header);
  return d;
}

Block genesis_of(ChainDescriptor const &d)
{
  return make_genesis(d.network_name, d.genesis_time_ms);
}

ChainRules rules_of(ChainDescriptor const &d)
{
  auto rules = ChainRules::consortium(d.validators, d.genesis_hash);
  rules.mode = d.mode;
  if (d.mode == ChainMode::PowDemo)
  {
    rules.pow_target = pow_target(d.pow_difficulty_bits);
  }
  rules.verify_cache = std::make_shared<VerifyCache>();
  return rules;
}

std::filesystem::path descriptor_path(std::filesystem::path const &data_dir)
{
  return data_dir / "chain.json";
}

std::filesystem::path block_log_path(std::filesystem::path const &data_dir)
{
  return data_dir / "blocks.log";
}

void write_descriptor(std::filesystem::path const &data_dir, ChainDescriptor const &d)
{
  json validators = json::array();
  for (auto const &k : d.validators)
  {
    validators.push_back(k.hex());
  }
  json identities = json::array();
  for (auto const &i : d.identities)
  {
    identities.push_back(identity_json(i));
  }
  json j{{"network_name", d.network_name},         {"genesis_time_ms", d.genesis_time_ms},
         {"mode", to_string(d.mode)},               {"pow_difficulty_bits", d.pow_difficulty_bits},
         {"validators", validators},                {"identities", identities},
         {"genesis_hash", d.genesis_hash.hex()}};
  std::filesystem::create_directories(data_dir);
  std::ofstream out(descriptor_path(data_dir), std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out)
  {
    throw StorageError("cannot write " + descriptor_path(data_dir).string());
  }
}

ChainDescriptor read_descriptor(std::filesystem::path const &data_dir)
{
  auto path = descriptor_path(data_dir);
  std::ifstream in(path);
  if (!in)
  {
    throw StorageError("cannot read " + path.string());
  }
  try
  {
    auto            j = json::parse(in);
    ChainDescriptor d;
    d.network_name        = j.at("network_name").get<std::string>();
    d.genesis_time_ms     = j.at("genesis_time_ms").get<std::uint64_t>();
    auto mode             = chain_mode_from_string(j.at("mode").get<std::string>());
    d.mode                = mode.value_or(ChainMode::Consortium);
    d.pow_difficulty_bits = j.value("pow_difficulty_bits", 0u);
    for (auto const &k : j.at("validators"))
    {
      d.validators.push_back(PublicKey::from_hex(k.get<std::string>()));
    }
    for (auto const &i : j.value("identities", json::array()))
    {
      d.identities.push_back(identity_from_json(i));
    }
    d.genesis_hash = Hash32::from_hex(j.at("genesis_hash").get<std::string>());
    if (!mode)
    {
      throw StorageError("unknown mode in " + path.string());
    }
    if (block_hash(genesis_of(d).header) != d.genesis_hash)
    {
      throw StorageError(path.string() + ": genesis_hash does not match network parameters");
    }
    return d;
  }
  catch (StorageError const &)
  {
    throw;
  }
  catch (std::exception const &e)
  {
    throw StorageError("malformed " + path.string() + ": " + e.what());
  }
}

Registry rebuild_registry(std::vector<BootstrapIdentity> const &bootstrap, ChainState const &chain)
{
  std::vector<StakeholderIdentity> ids;
  for (auto const &b : bootstrap)
  {
    ids.push_back(StakeholderIdentity::make(b.public_key, b.role, b.linked_patient_id));
  }
  auto registry = Registry::bootstrap(ids);
  for (auto const &block : chain.blocks())
  {
    for (auto const &tx : block->transactions)
    {
      if (tx.op_kind != OpKind::RegisterIdentity)
      {
        continue;
      }
      try
      {
        auto reg = decode_registration(tx.payload);
        registry = register_stakeholder(registry, reg.identity, tx.actor_id, reg.admin_signature);
      }
      catch (std::exception const &)
      {
      }
    }
  }
  return registry;
}

// ---------------------------------------------------------------------------
// client-side helpers

Hash32 request_digest(std::string_view body, std::string_view timestamp)
{
  return Sha256{}.update(as_bytes(body)).update(as_bytes(timestamp)).finish();
}

Headers sign_request(KeyPair const &actor, std::string_view body, std::uint64_t timestamp_ms)
{
  auto ts  = std::to_string(timestamp_ms);
  auto sig = sign_payload(actor.private_key, request_digest(body, ts).view());
  return {{"x-actor-id", actor.id().hex()}, {"x-timestamp", ts}, {"x-signature", sig.hex()}};
}

std::string record_to_json(PatientRecord const &record)
{
  json j   = json::object();
  auto fld = record_fields(record);
  for (std::size_t i = 0; i < kRecordFieldCount; ++i)
  {
    j[std::string(kRecordFieldNames[i])] = *fld[i];
  }
  return j.dump();
}

PatientRecord record_from_json(std::string const &text)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (json::exception const &e)
  {
    throw BadRequest(std::string("body is not JSON: ") + e.what());
  }
  if (!j.is_object())
  {
    throw BadRequest("body must be a JSON object");
  }
  PatientRecord r;
  auto          fld = record_fields(r);
  for (auto const &[key, value] : j.items())
  {
    auto it = std::find(kRecordFieldNames.begin(), kRecordFieldNames.end(), key);
    if (it == kRecordFieldNames.end())
    {
      throw BadRequest("unknown field " + key);
    }
    if (!value.is_string())
    {
      throw BadRequest("field " + key + " must be a string");
    }
    *fld[static_cast<std::size_t>(it - kRecordFieldNames.begin())] = value.get<std::string>();
  }
  return r;
}

SignedCall record_call(KeyPair const &actor, PatientRecord const &record, OpKind op,
                       std::uint64_t timestamp_ms)
{
  SignedCall call;
  call.body    = record_to_json(record);
  call.headers = sign_request(actor, call.body, timestamp_ms);
  // An invalid record still gets a well-formed call; the server answers 422.
  Bytes payload;
  try
  {
    payload = canonical_encode_record(record);
  }
  catch (InvalidRecord const &)
  {
  }
  call.tx_hash = compute_tx_hash(op, payload, actor.id(), timestamp_ms);
  call.headers["x-tx-signature"] = sign_payload(actor.private_key, call.tx_hash.view()).hex();
  return call;
}

SignedCall registration_call(KeyPair const &admin, StakeholderIdentity const &identity,
                             std::uint64_t timestamp_ms)
{
  auto identity_at             = identity;
  identity_at.registered_at_ms = timestamp_ms;
  auto admin_sig               = sign_payload(admin.private_key, encode_identity(identity_at));
  json body{{"public_key", identity.public_key.hex()},
            {"role", to_string(identity.role)},
            {"admin_signature", admin_sig.hex()}};
  if (identity.linked_patient_id)
  {
    body["linked_patient_id"] = *identity.linked_patient_id;
  }
  SignedCall call;
  call.body    = body.dump();
  call.headers = sign_request(admin, call.body, timestamp_ms);
  call.tx_hash = compute_tx_hash(OpKind::RegisterIdentity,
                                 encode_registration({identity_at, admin_sig}), admin.id(),
                                 timestamp_ms);
  call.headers["x-tx-signature"] = sign_payload(admin.private_key, call.tx_hash.view()).hex();
  return call;
}

std::uint64_t system_clock_ms()
{
  using namespace std::chrono;
  return static_cast<std::uint64_t>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

// ---------------------------------------------------------------------------
// node

struct ExplorerEntry
{
  Hash32                     tx_hash;
  OpKind                     op{OpKind::CreateRecord};
  std::uint64_t              height{0};
  std::size_t                index{0};
  std::uint64_t              timestamp_ms{0};
  IdentityId                 actor;
  std::string                patient_id;
};

struct Node::Views
{
  ChainState                    chain;
  StateView                     state;
  std::shared_ptr<Registry const> registry;
  std::vector<ExplorerEntry>    rows;  // commit order
  std::map<Hash32, std::size_t> by_hash;

  explicit Views(ChainState c)
    : chain(std::move(c))
  {}

  void index(Block const &block)
  {
    state.apply(block);
    for (std::size_t i = 0; i < block.transactions.size(); ++i)
    {
      auto const &tx      = block.transactions[i];
      auto        patient = patient_of(tx);
      if (!patient)
      {
        continue;
      }
      by_hash.emplace(tx.tx_hash, rows.size());
      rows.push_back({tx.tx_hash, tx.op_kind, block.header.height, i, tx.timestamp_ms, tx.actor_id,
                      *patient});
    }
  }
};

namespace {

json row_json(ExplorerEntry const &e, std::uint64_t now)
{
  return {{"txn_hash", e.tx_hash.hex()},
          {"method", to_string(e.op)},
          {"block", e.height},
          {"age_ms", now > e.timestamp_ms ? now - e.timestamp_ms : 0},
          {"timestamp_ms", e.timestamp_ms},
          {"from", e.actor.hex()},
          {"to", e.patient_id},
          {"value", "0"},
          {"txn_fee", "0"}};
}

json record_state_json(RecordState const &s)
{
  auto j    = json::parse(record_to_json(s.latest));
  json prov = json::array();
  for (auto const &h : s.provenance)
  {
    prov.push_back(h.hex());
  }
  j["provenance"]     = prov;
  j["created_height"] = s.created_height;
  return j;
}

json proof_json(Block const &block, std::size_t index)
{
  auto       leaves = transaction_leaves(block.transactions);
  auto       proof  = merkle::MerkleTree(leaves).prove(index);
  json       steps  = json::array();
  for (auto const &s : proof.siblings)
  {
    steps.push_back({{"hash", s.sibling.hex()}, {"side", s.side == merkle::Side::Left ? "left" : "right"}});
  }
  return {{"tx_hash", block.transactions[index].tx_hash.hex()},
          {"block", block.header.height},
          {"index", index},
          {"leaf", to_hex(leaves[index])},
          {"body_root", block.header.body_root.hex()},
          {"siblings", steps}};
}

// Linked patient id when the actor may only see its own rows.
std::optional<std::string> own_patient_filter(Registry const &registry, IdentityId const &actor)
{
  auto const *entry = registry.find(actor);
  if (entry && entry->identity.role == Role::Patient)
  {
    return entry->identity.linked_patient_id.value_or(std::string{});
  }
  return std::nullopt;
}

ApiResponse forbidden(AccessDecision const &d)
{
  return reply(403, {{"error", "forbidden"}, {"rule", d.rule}});
}

}  // namespace

Node::Node(NodeConfig config, KeyPair validator_key, Clock clock)
  : config_(std::move(config))
  , key_(std::move(validator_key))
  , clock_(std::move(clock))
  , descriptor_(descriptor_of(config_))
  , rules_(rules_of(descriptor_))
  , validators_(descriptor_.validators)
{
  if (!validators_.index_of(key_.id()))
  {
    throw ConfigError("validator key " + key_.id().hex() + " is not in the validator set");
  }
  auto genesis = genesis_of(descriptor_);
  if (config_.data_dir.empty())
  {
    ledger_.emplace(rules_, genesis, std::nullopt);
  }
  else
  {
    std::filesystem::create_directories(config_.data_dir);
    if (std::filesystem::exists(descriptor_path(config_.data_dir)))
    {
      auto stored = read_descriptor(config_.data_dir);
      if (stored.genesis_hash != descriptor_.genesis_hash ||
          stored.validators != descriptor_.validators)
      {
        throw ConfigError("data directory " + config_.data_dir.string() +
                          " belongs to a different network");
      }
    }
    else
    {
      write_descriptor(config_.data_dir, descriptor_);
    }
    ledger_.emplace(Ledger::open(rules_, genesis, block_log_path(config_.data_dir)));
  }

  registry_ = rebuild_registry(descriptor_.identities, ledger_->chain());
  auto views      = std::make_shared<Views>(ChainState(ledger_->chain().at(0)));
  views->registry = std::make_shared<Registry const>(registry_);
  for (std::uint64_t h = 1; h < ledger_->chain().size(); ++h)
  {
    views->chain.push_unchecked(ledger_->chain().at(h));
    views->index(ledger_->chain().at(h));
  }
  views_ = std::move(views);

  consensus::EngineConfig ec;
  ec.key                = key_;
  ec.validators         = validators_;
  ec.rules              = rules_;
  ec.max_block_txs      = config_.max_block_txs;
  ec.base_timeout_ticks = config_.base_timeout_ticks;
  ec.max_timeout_ticks  = config_.max_timeout_ticks;
  ec.time_origin_ms     = 0;
  ec.ms_per_tick        = config_.tick_ms;
  ec.tx_check           = [this](Transaction const &tx) { return check_tx(tx); };
  engine_               = std::make_unique<consensus::Engine>(std::move(ec), ledger_->chain());
}

void Node::set_peer_sender(PeerSender sender)
{
  std::lock_guard lock(mutex_);
  sender_ = std::move(sender);
}

Tick Node::now_tick() const
{
  return clock_() / config_.tick_ms;
}

std::optional<std::string> Node::check_tx(Transaction const &tx) const
{
  auto const *entry = registry_.find(tx.actor_id);
  if (entry == nullptr)
  {
    return "unregistered";
  }
  if (!verify_transaction(tx, entry->identity.public_key))
  {
    return "bad-signature";
  }
  if (tx.op_kind == OpKind::RegisterIdentity)
  {
    auto d = authorize(registry_, tx.actor_id, Action::RegisterIdentity);
    if (!d.allowed)
    {
      return d.rule;
    }
    try
    {
      auto reg = decode_registration(tx.payload);
      (void)register_stakeholder(registry_, reg.identity, tx.actor_id, reg.admin_signature);
    }
    catch (RegistryError const &e)
    {
      return to_string(e.kind());
    }
    catch (DecodeError const &)
    {
      return "malformed-registration";
    }
    return std::nullopt;
  }
  PatientRecord record;
  try
  {
    record = decode_record(tx.payload);
  }
  catch (DecodeError const &)
  {
    return "malformed-record";
  }
  if (has_blocking_violation(validate_record(record)))
  {
    return "invalid-record";
  }
  auto action = tx.op_kind == OpKind::CreateRecord ? Action::AddRecord : Action::UpdateRecord;
  auto d      = authorize(registry_, tx.actor_id, action, record.patient_id);
  if (!d.allowed)
  {
    return d.rule;
  }
  return std::nullopt;
}

void Node::apply_commit(Block const &block)
{
  try
  {
    ledger_->append(block);
  }
  catch (std::exception const &e)
  {
    std::cerr << "ledgerehr: commit of height " << block.header.height
              << " failed to persist: " << e.what() << "\n";
    return;
  }
  for (auto const &tx : block.transactions)
  {
    if (tx.op_kind != OpKind::RegisterIdentity)
    {
      continue;
    }
    try
    {
      auto reg  = decode_registration(tx.payload);
      registry_ = register_stakeholder(registry_, reg.identity, tx.actor_id, reg.admin_signature);
    }
    catch (std::exception const &)
    {
      // a second registration of the same identity in one block
    }
  }
  auto next      = std::make_shared<Views>(*views_);
  next->chain.push_unchecked(block);
  next->index(block);
  next->registry = std::make_shared<Registry const>(registry_);
  views_         = std::move(next);
}

void Node::drain()
{
  for (auto &c : engine_->take_commits())
  {
    apply_commit(c.block);
  }
  for (auto &o : engine_->take_outbox())
  {
    pending_out_.emplace_back(o.to, encode_message(o.message));
  }
  engine_->take_events();
}

namespace {

void flush(PeerSender const &sender,
           std::vector<std::pair<std::optional<IdentityId>, Bytes>> frames)
{
  if (!sender)
  {
    return;
  }
  for (auto &[to, bytes] : frames)
  {
    sender(to, std::move(bytes));
  }
}

}  // namespace

void Node::tick()
{
  PeerSender                                              sender;
  std::vector<std::pair<std::optional<IdentityId>, Bytes>> out;
  {
    std::lock_guard lock(mutex_);
    engine_->tick(now_tick());
    drain();
    out    = std::exchange(pending_out_, {});
    sender = sender_;
  }
  flush(sender, std::move(out));
}

void Node::deliver(ByteView frame)
{
  auto                                                    message = consensus::decode_message(frame);
  PeerSender                                              sender;
  std::vector<std::pair<std::optional<IdentityId>, Bytes>> out;
  {
    std::lock_guard lock(mutex_);
    engine_->on_message(message, now_tick());
    drain();
    out    = std::exchange(pending_out_, {});
    sender = sender_;
  }
  flush(sender, std::move(out));
}

IdentityId Node::id() const
{
  return key_.id();
}

std::uint64_t Node::height() const
{
  std::lock_guard lock(mutex_);
  return views_->chain.height();
}

Hash32 Node::tip_hash() const
{
  std::lock_guard lock(mutex_);
  return views_->chain.tip_hash();
}

std::size_t Node::pool_size() const
{
  std::lock_guard lock(mutex_);
  return engine_->pool_size();
}

ChainState Node::chain() const
{
  std::lock_guard lock(mutex_);
  return views_->chain;
}

Registry Node::registry() const
{
  std::lock_guard lock(mutex_);
  return registry_;
}

ApiResponse Node::submit(Transaction tx, std::vector<RecordViolation> const &warnings)
{
  // caller holds the lock
  auto now = now_tick();
  if (engine_->is_committed(tx.tx_hash) || engine_->pool_position(tx.tx_hash))
  {
    return error(409, "duplicate", "transaction " + tx.tx_hash.hex() + " already submitted");
  }
  if (!engine_->submit(tx, now))
  {
    return error(422, "rejected", check_tx(tx).value_or("rejected by the pool"));
  }
  pending_out_.emplace_back(std::nullopt, encode_message(consensus::TxGossip{tx}));
  auto position = engine_->pool_position(tx.tx_hash);
  engine_->tick(now);
  drain();
  json warn = json::array();
  for (auto const &w : warnings)
  {
    warn.push_back({{"field", w.field}, {"rule", w.rule}});
  }
  return reply(202, {{"tx_hash", tx.tx_hash.hex()},
                     {"pool_position", position.value_or(0)},
                     {"status", engine_->is_committed(tx.tx_hash) ? "committed" : "pending"},
                     {"warnings", warn}});
}

ApiResponse Node::submit_record(IdentityId const &actor, ApiRequest const &req, OpKind op,
                                std::optional<std::string> const &path_id)
{
  auto record = record_from_json(req.body);
  if (path_id)
  {
    if (record.patient_id.empty())
    {
      record.patient_id = *path_id;
    }
    else if (record.patient_id != *path_id)
    {
      return reply(422, {{"error", "invalid-record"},
                         {"violations", json::array({{{"field", "patient_id"},
                                                      {"rule", "path-mismatch"},
                                                      {"severity", "error"}}})}});
    }
  }
  std::lock_guard lock(mutex_);
  auto action = op == OpKind::CreateRecord ? Action::AddRecord : Action::UpdateRecord;
  auto d      = authorize(registry_, actor, action, record.patient_id);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  auto violations = validate_record(record);
  if (has_blocking_violation(violations))
  {
    json list = json::array();
    for (auto const &v : violations)
    {
      list.push_back({{"field", v.field},
                      {"rule", v.rule},
                      {"severity", v.severity == Severity::Error ? "error" : "advisory"}});
    }
    return reply(422, {{"error", "invalid-record"}, {"violations", list}});
  }
  bool exists = views_->state.find(record.patient_id) != nullptr;
  if (op == OpKind::CreateRecord && exists)
  {
    return error(409, "conflict", "patient " + record.patient_id + " already exists");
  }
  if (op == OpKind::UpdateRecord && !exists)
  {
    return error(409, "conflict", "patient " + record.patient_id + " does not exist");
  }
  auto sig = parse_hex<Signature>(header(req, "x-tx-signature"));
  if (!sig)
  {
    return error(401, "unauthenticated", "missing or malformed X-Tx-Signature");
  }
  auto ts = *parse_u64(header(req, "x-timestamp"));
  auto tx = assemble_transaction(op, canonical_encode_record(record), actor, ts, *sig);
  if (!verify_transaction(tx, registry_))
  {
    return error(401, "unauthenticated", "X-Tx-Signature does not verify over tx_hash");
  }
  return submit(std::move(tx), violations);
}

ApiResponse Node::submit_registration(IdentityId const &actor, ApiRequest const &req)
{
  json body;
  try
  {
    body = json::parse(req.body);
  }
  catch (json::exception const &e)
  {
    throw BadRequest(std::string("body is not JSON: ") + e.what());
  }
  std::optional<PublicKey>   key;
  std::optional<Role>        role;
  std::optional<Signature>   admin_sig;
  std::optional<std::string> link;
  if (body.is_object())
  {
    if (body.contains("public_key") && body["public_key"].is_string())
    {
      key = parse_hex<PublicKey>(body["public_key"].get<std::string>());
    }
    if (body.contains("role") && body["role"].is_string())
    {
      role = role_from_string(body["role"].get<std::string>());
    }
    if (body.contains("admin_signature") && body["admin_signature"].is_string())
    {
      admin_sig = parse_hex<Signature>(body["admin_signature"].get<std::string>());
    }
    if (body.contains("linked_patient_id") && body["linked_patient_id"].is_string())
    {
      link = body["linked_patient_id"].get<std::string>();
    }
  }
  std::lock_guard lock(mutex_);
  auto            d = authorize(registry_, actor, Action::RegisterIdentity);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  if (!key || !role || !admin_sig)
  {
    throw BadRequest("registration needs public_key, role and admin_signature");
  }
  auto ts       = *parse_u64(header(req, "x-timestamp"));
  auto identity = StakeholderIdentity::make(*key, *role, link, ts);
  try
  {
    (void)register_stakeholder(registry_, identity, actor, *admin_sig);
  }
  catch (RegistryError const &e)
  {
    int status = e.kind() == RegistryError::Kind::DuplicateIdentity ? 409 : 422;
    return reply(status,
                 {{"error", "registration-rejected"}, {"kind", to_string(e.kind())}, {"reason", e.what()}});
  }
  auto sig = parse_hex<Signature>(header(req, "x-tx-signature"));
  if (!sig)
  {
    return error(401, "unauthenticated", "missing or malformed X-Tx-Signature");
  }
  auto tx = assemble_transaction(OpKind::RegisterIdentity,
                                 encode_registration({identity, *admin_sig}), actor, ts, *sig);
  if (!verify_transaction(tx, registry_))
  {
    return error(401, "unauthenticated", "X-Tx-Signature does not verify over tx_hash");
  }
  auto response = submit(std::move(tx), {});
  if (response.status == 202)
  {
    auto j           = json::parse(response.body);
    j["identity_id"] = identity.identity_id.hex();
    response.body    = j.dump();
  }
  return response;
}

ApiResponse Node::list_patients(IdentityId const &actor)
{
  std::shared_ptr<Views const> views;
  {
    std::lock_guard lock(mutex_);
    views = views_;
  }
  auto const &registry = *views->registry;
  json        rows     = json::array();
  auto        d        = authorize(registry, actor, Action::ListRecords);
  if (d.allowed)
  {
    for (auto const *s : views->state.records())
    {
      rows.push_back(record_state_json(*s));
    }
  }
  else
  {
    // patients list their own record only
    auto own = own_patient_filter(registry, actor);
    if (!own || !authorize(registry, actor, Action::ReadRecord, *own).allowed)
    {
      return forbidden(d);
    }
    if (auto const *s = views->state.find(*own))
    {
      rows.push_back(record_state_json(*s));
    }
  }
  return reply(200, {{"count", rows.size()}, {"records", rows}});
}

ApiResponse Node::get_patient(IdentityId const &actor, std::string const &id)
{
  std::shared_ptr<Views const> views;
  {
    std::lock_guard lock(mutex_);
    views = views_;
  }
  auto d = authorize(*views->registry, actor, Action::ReadRecord, id);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  auto const *s = views->state.find(id);
  if (s == nullptr)
  {
    return error(404, "not-found", "no committed record for patient " + id);
  }
  return reply(200, record_state_json(*s));
}

ApiResponse Node::explorer_page(IdentityId const &actor, ApiRequest const &req)
{
  std::shared_ptr<Views const> views;
  {
    std::lock_guard lock(mutex_);
    views = views_;
  }
  auto d = authorize(*views->registry, actor, Action::ReadChain);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  std::uint64_t page = 1;
  if (auto it = req.query.find("page"); it != req.query.end())
  {
    auto p = parse_u64(it->second);
    if (!p || *p == 0)
    {
      throw BadRequest("page must be a positive integer");
    }
    page = *p;
  }
  auto                               own = own_patient_filter(*views->registry, actor);
  std::vector<ExplorerEntry const *> visible;
  for (auto it = views->rows.rbegin(); it != views->rows.rend(); ++it)
  {
    if (!own || it->patient_id == *own)
    {
      visible.push_back(&*it);
    }
  }
  auto now   = clock_();
  json rows  = json::array();
  auto first = (page - 1) * kExplorerPageSize;
  for (auto i = first; i < visible.size() && i < first + kExplorerPageSize; ++i)
  {
    rows.push_back(row_json(*visible[i], now));
  }
  return reply(200, {{"page", page},
                     {"page_size", kExplorerPageSize},
                     {"total", visible.size()},
                     {"rows", rows}});
}

ApiResponse Node::explorer_tx(IdentityId const &actor, std::string const &hash, bool proof)
{
  std::shared_ptr<Views const> views;
  {
    std::lock_guard lock(mutex_);
    views = views_;
  }
  auto d = authorize(*views->registry, actor, Action::ReadChain);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  auto h  = parse_hex<Hash32>(hash);
  auto it = h ? views->by_hash.find(*h) : views->by_hash.end();
  if (it == views->by_hash.end())
  {
    return error(404, "not-found", "no committed transaction " + hash);
  }
  auto const &entry = views->rows[it->second];
  auto        own   = own_patient_filter(*views->registry, actor);
  if (own && entry.patient_id != *own)
  {
    return forbidden({false, "patient:link-mismatch"});
  }
  if (proof)
  {
    return reply(200, proof_json(views->chain.at(entry.height), entry.index));
  }
  return reply(200, row_json(entry, clock_()));
}

ApiResponse Node::explorer_block(IdentityId const &actor, std::string const &height,
                                 ApiRequest const &req)
{
  std::shared_ptr<Views const> views;
  {
    std::lock_guard lock(mutex_);
    views = views_;
  }
  auto d = authorize(*views->registry, actor, Action::ReadChain);
  if (!d.allowed)
  {
    return forbidden(d);
  }
  auto h = parse_u64(height);
  if (!h)
  {
    throw BadRequest("block height must be a non-negative integer");
  }
  if (*h >= views->chain.size())
  {
    return error(404, "not-found", "no block at height " + height);
  }
  auto const &block = views->chain.at(*h);
  auto const &hd    = block.header;
  auto        own   = own_patient_filter(*views->registry, actor);
  json        txs   = json::array();
  for (std::size_t i = 0; i < block.transactions.size(); ++i)
  {
    auto const &tx      = block.transactions[i];
    auto        patient = patient_of(tx);
    if (own && patient != own)
    {
      continue;
    }
    json t{{"index", i}, {"tx_hash", tx.tx_hash.hex()}, {"method", to_string(tx.op_kind)}};
    if (patient)
    {
      t["to"] = *patient;
    }
    txs.push_back(t);
  }
  json j{{"height", hd.height},
         {"hash", block_hash(hd).hex()},
         {"version", hd.version},
         {"prev_hash", hd.prev_hash.hex()},
         {"timestamp_ms", hd.timestamp_ms},
         {"body_root", hd.body_root.hex()},
         {"target", hd.target.hex()},
         {"nonce", hd.nonce},
         {"proposer_id", hd.proposer_id.hex()},
         {"commit_signature_count", block.commit_signatures.size()},
         {"transactions", txs}};
  if (auto it = req.query.find("tx"); it != req.query.end())
  {
    auto th = parse_hex<Hash32>(it->second);
    auto pos = std::find_if(block.transactions.begin(), block.transactions.end(),
                            [&](Transaction const &tx) { return th && tx.tx_hash == *th; });
    if (pos == block.transactions.end())
    {
      return error(404, "not-found", "transaction " + it->second + " is not in block " + height);
    }
    if (own && patient_of(*pos) != own)
    {
      return forbidden({false, "patient:link-mismatch"});
    }
    j["proof"] = proof_json(block, static_cast<std::size_t>(pos - block.transactions.begin()));
  }
  return reply(200, j);
}

ApiResponse Node::verify(IdentityId const &actor)
{
  AuditReport report;
  {
    std::lock_guard lock(mutex_);
    auto const     *entry = registry_.find(actor);
    if (entry == nullptr || entry->revoked || entry->identity.role != Role::Admin)
    {
      return forbidden({false, "admin-only"});
    }
    if (config_.data_dir.empty())
    {
      report = verify_chain(ledger_->chain(), rules_);
    }
    else
    {
      try
      {
        report = verify_log(read_file(block_log_path(config_.data_dir)), rules_);
      }
      catch (StorageError const &e)
      {
        report.ok            = false;
        report.failed_height = 0;
        report.reason        = e.what();
      }
    }
  }
  json j{{"ok", report.ok}, {"height", report.height}, {"reason", report.reason}};
  j["failed_height"] = report.failed_height ? json(*report.failed_height) : json(nullptr);
  return reply(200, j);
}

ApiResponse Node::handle(ApiRequest const &req)
{
  try
  {
    std::vector<std::string> parts;
    {
      std::string_view p = req.path;
      while (!p.empty())
      {
        if (p.front() == '/')
        {
          p.remove_prefix(1);
          continue;
        }
        auto slash = p.find('/');
        parts.emplace_back(p.substr(0, slash));
        p.remove_prefix(slash == std::string_view::npos ? p.size() : slash);
      }
    }
    auto is = [&](std::string const &method, std::initializer_list<char const *> shape) {
      if (req.method != method || parts.size() != shape.size())
      {
        return false;
      }
      std::size_t i = 0;
      for (auto const *s : shape)
      {
        if (std::string_view(s) != "*" && parts[i] != s)
        {
          return false;
        }
        ++i;
      }
      return true;
    };

    if (is("GET", {"health"}))
    {
      std::lock_guard lock(mutex_);
      return reply(200, {{"status", "ok"},
                         {"validator_id", key_.id().hex()},
                         {"height", views_->chain.height()},
                         {"tip_hash", views_->chain.tip_hash().hex()}});
    }

    // authentication applies to every other path, known or not
    auto actor_hex = header(req, "x-actor-id");
    auto ts_text   = header(req, "x-timestamp");
    auto sig_hex   = header(req, "x-signature");
    if (actor_hex.empty() || ts_text.empty() || sig_hex.empty())
    {
      return error(401, "unauthenticated", "X-Actor-Id, X-Timestamp and X-Signature are required");
    }
    auto actor = parse_hex<IdentityId>(actor_hex);
    auto ts    = parse_u64(ts_text);
    auto sig   = parse_hex<Signature>(sig_hex);
    if (!actor || !ts || !sig)
    {
      return error(401, "unauthenticated", "malformed authentication headers");
    }
    auto now  = clock_();
    auto skew = now > *ts ? now - *ts : *ts - now;
    if (skew > kReplayWindowMs)
    {
      return error(401, "unauthenticated", "timestamp outside the replay window");
    }
    bool      peer = is("POST", {"peer", "message"});
    PublicKey key;
    {
      std::lock_guard lock(mutex_);
      if (peer)
      {
        auto const *k = validators_.key_of(*actor);
        if (k == nullptr)
        {
          return error(401, "unauthenticated", "unknown validator");
        }
        key = *k;
      }
      else
      {
        auto const *entry = registry_.find(*actor);
        if (entry == nullptr)
        {
          return error(401, "unauthenticated", "unknown actor");
        }
        key = entry->identity.public_key;
      }
    }
    if (!verify_payload(key, request_digest(req.body, ts_text).view(), *sig))
    {
      return error(401, "unauthenticated", "signature does not verify");
    }

    if (peer)
    {
      try
      {
        deliver(as_bytes(req.body));
      }
      catch (DecodeError const &e)
      {
        throw BadRequest(std::string("bad consensus frame: ") + e.what());
      }
      return reply(202, json::object());
    }
    if (is("POST", {"patients"}))
    {
      return submit_record(*actor, req, OpKind::CreateRecord, std::nullopt);
    }
    if (is("PUT", {"patients", "*"}))
    {
      return submit_record(*actor, req, OpKind::UpdateRecord, parts[1]);
    }
    if (is("GET", {"patients"}))
    {
      return list_patients(*actor);
    }
    if (is("GET", {"patients", "*"}))
    {
      return get_patient(*actor, parts[1]);
    }
    if (is("GET", {"explorer", "txs"}))
    {
      return explorer_page(*actor, req);
    }
    if (is("GET", {"explorer", "tx", "*"}))
    {
      return explorer_tx(*actor, parts[2], false);
    }
    if (is("GET", {"explorer", "proof", "*"}))
    {
      return explorer_tx(*actor, parts[2], true);
    }
    if (is("GET", {"explorer", "blocks", "*"}))
    {
      return explorer_block(*actor, parts[2], req);
    }
    if (is("POST", {"admin", "identities"}))
    {
      return submit_registration(*actor, req);
    }
    if (is("POST", {"admin", "verify"}))
    {
      return verify(*actor);
    }
    return error(404, "not-found", req.method + " " + req.path);
  }
  catch (BadRequest const &e)
  {
    return error(400, "bad-request", e.what());
  }
  catch (std::exception const &e)
  {
    return error(500, "internal", e.what());
  }
}

// ---------------------------------------------------------------------------
// transports

void LocalNetwork::add(Node &node)
{
  std::lock_guard lock(mutex_);
  auto from = node.id();
  auto same = std::find_if(nodes_.begin(), nodes_.end(), [&](Node *n) { return n->id() == from; });
  if (same != nodes_.end())
  {
    *same = &node;
  }
  else
  {
    nodes_.push_back(&node);
  }
  node.set_peer_sender([this, from](std::optional<IdentityId> const &to, Bytes frame) {
    std::lock_guard inner(mutex_);
    queue_.push_back({from, to, std::move(frame)});
  });
}

void LocalNetwork::set_down(IdentityId const &id, bool down)
{
  std::lock_guard lock(mutex_);
  if (down)
  {
    down_.insert(id);
  }
  else
  {
    down_.erase(id);
  }
}

std::size_t LocalNetwork::pump()
{
  std::size_t delivered = 0;
  while (true)
  {
    Frame               frame;
    std::vector<Node *> targets;
    {
      std::lock_guard lock(mutex_);
      if (queue_.empty())
      {
        return delivered;
      }
      frame = std::move(queue_.front());
      queue_.pop_front();
      if (down_.contains(frame.from))
      {
        continue;
      }
      for (auto *n : nodes_)
      {
        if (n->id() != frame.from && !down_.contains(n->id()) && (!frame.to || *frame.to == n->id()))
        {
          targets.push_back(n);
        }
      }
    }
    for (auto *n : targets)
    {
      n->deliver(frame.bytes);
      ++delivered;
    }
  }
}

HttpPeerSender::HttpPeerSender(KeyPair key, std::vector<ValidatorEntry> peers, Clock clock)
  : key_(std::move(key))
  , clock_(std::move(clock))
{
  for (auto const &p : peers)
  {
    auto id = identity_of(p.public_key);
    if (id != key_.id() && !p.url.empty())
    {
      urls_[id] = p.url;
    }
  }
  worker_ = std::thread([this] { run(); });
}

HttpPeerSender::~HttpPeerSender()
{
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void HttpPeerSender::set_url(IdentityId const &id, std::string url)
{
  std::lock_guard lock(mutex_);
  urls_[id] = std::move(url);
}

void HttpPeerSender::send(std::optional<IdentityId> const &to, Bytes frame)
{
  static constexpr std::size_t kMaxQueued = 10000;
  {
    std::lock_guard lock(mutex_);
    for (auto const &[id, url] : urls_)
    {
      if (!to || *to == id)
      {
        if (queue_.size() >= kMaxQueued)
        {
          queue_.pop_front();
        }
        queue_.emplace_back(url, frame);
      }
    }
  }
  cv_.notify_one();
}

void HttpPeerSender::run()
{
  std::map<std::string, std::unique_ptr<httplib::Client>> clients;
  while (true)
  {
    std::pair<std::string, Bytes> item;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_)
      {
        return;
      }
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    auto &client = clients[item.first];
    if (!client)
    {
      client = std::make_unique<httplib::Client>(item.first);
      client->set_connection_timeout(0, 200'000);
      client->set_read_timeout(1, 0);
      client->set_write_timeout(1, 0);
    }
    std::string     body(item.second.begin(), item.second.end());
    httplib::Headers headers;
    for (auto const &[k, v] : sign_request(key_, body, clock_()))
    {
      headers.emplace(k, v);
    }
    (void)client->Post("/peer/message", headers, body, "application/octet-stream");
  }
}

struct NodeServer::Impl
{
  httplib::Server         server;
  std::thread             listener;
  std::thread             ticker;
  std::mutex              mutex;
  std::condition_variable cv;
  bool                    stopping{false};
};

NodeServer::NodeServer(Node &node)
  : node_(node)
  , impl_(std::make_unique<Impl>())
{
  auto handler = [this](httplib::Request const &req, httplib::Response &res) {
    ApiRequest api;
    api.method = req.method;
    api.path   = req.path;
    api.body   = req.body;
    for (auto const &[k, v] : req.params)
    {
      api.query.emplace(k, v);
    }
    for (auto const &[k, v] : req.headers)
    {
      std::string lower = k;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      api.headers.emplace(lower, v);
    }
    auto out   = node_.handle(api);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
  impl_->server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  impl_->server.Options(".*", [](httplib::Request const &, httplib::Response &res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers",
                   "Content-Type, X-Actor-Id, X-Timestamp, X-Signature, X-Tx-Signature");
    res.status = 204;
  });
}

NodeServer::~NodeServer()
{
  stop();
}

int NodeServer::start(std::string const &host, int port)
{
  if (port == 0)
  {
    port_ = impl_->server.bind_to_any_port(host);
  }
  else
  {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0)
  {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->ticker   = std::thread([this] {
    auto period = std::chrono::milliseconds(node_.config().tick_ms);
    std::unique_lock lock(impl_->mutex);
    while (!impl_->cv.wait_for(lock, period, [this] { return impl_->stopping; }))
    {
      lock.unlock();
      node_.tick();
      lock.lock();
    }
  });
  return port_;
}

void NodeServer::stop()
{
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopping)
    {
      return;
    }
    impl_->stopping = true;
  }
  impl_->cv.notify_all();
  impl_->server.stop();
  if (impl_->listener.joinable())
  {
    impl_->listener.join();
  }
  if (impl_->ticker.joinable())
  {
    impl_->ticker.join();
  }
}

}  // namespace ledgerehr
