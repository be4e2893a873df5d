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

#include "ledgerehr/netsim.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <array>
#include <unordered_map>

namespace ledgerehr::netsim {

using consensus::Engine;
using consensus::EngineConfig;
using consensus::Message;
using consensus::Outgoing;
using consensus::ValidatorSet;

std::uint64_t SplitMix64::next()
{
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z               = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z               = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::next_unit()
{
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::uniform(std::uint64_t lo, std::uint64_t hi)
{
  if (hi <= lo)
  {
    return lo;
  }
  auto span = hi - lo + 1;
  return span == 0 ? next() : lo + next() % span;
}

void validate_scenario(Scenario const &s)
{
  auto fail = [](std::string const &what) { throw InvalidScenario("invalid scenario: " + what); };
  if (s.n_validators < 1)
  {
    fail("n_validators must be >= 1");
  }
  if (!(s.drop_rate >= 0.0 && s.drop_rate < 1.0))
  {
    fail("drop_rate must be in [0, 1)");
  }
  if (!(s.duplicate_rate >= 0.0 && s.duplicate_rate < 1.0))
  {
    fail("duplicate_rate must be in [0, 1)");
  }
  if (s.min_delay_ticks > s.max_delay_ticks)
  {
    fail("delay_distribution min_ticks > max_ticks");
  }
  if (s.base_timeout_ticks == 0 || s.max_timeout_ticks < s.base_timeout_ticks)
  {
    fail("timeouts must satisfy 0 < base <= max");
  }
  if (s.max_block_txs == 0)
  {
    fail("max_block_txs must be positive");
  }
  Tick last_end = 0;
  for (auto const &p : s.partitions)
  {
    if (p.end_tick < p.start_tick)
    {
      fail("partition ends before it starts");
    }
    if (p.start_tick < last_end)
    {
      fail("partition windows must be ordered and non-overlapping");
    }
    last_end = p.end_tick;
    std::set<std::size_t> seen;
    for (auto const &g : p.groups)
    {
      for (auto v : g)
      {
        if (v >= s.n_validators || !seen.insert(v).second)
        {
          fail("partition group names an unknown or repeated validator");
        }
      }
    }
  }
  for (auto const &c : s.crash_schedule)
  {
    if (c.validator >= s.n_validators)
    {
      fail("crash_schedule names an unknown validator");
    }
    if (c.recover_tick && *c.recover_tick < c.crash_tick)
    {
      fail("recover_tick precedes crash_tick");
    }
  }
  for (auto const &w : s.workload)
  {
    if (w.op == OpKind::RegisterIdentity)
    {
      fail("workload supports create and update only");
    }
    if (has_blocking_violation(validate_record(w.record)))
    {
      fail("workload record for '" + w.record.patient_id + "' is invalid");
    }
  }
}

namespace {

nlohmann::json record_to_json(PatientRecord const &r)
{
  nlohmann::json j = nlohmann::json::object();
  auto           f = record_fields(r);
  for (std::size_t i = 0; i < kRecordFieldCount; ++i)
  {
    if (!f[i]->empty())
    {
      j[std::string(kRecordFieldNames[i])] = *f[i];
    }
  }
  return j;
}

PatientRecord record_from_json(nlohmann::json const &j)
{
  PatientRecord r;
  auto          f = record_fields(r);
  for (std::size_t i = 0; i < kRecordFieldCount; ++i)
  {
    auto key = std::string(kRecordFieldNames[i]);
    if (j.contains(key))
    {
      *f[i] = j.at(key).get<std::string>();
    }
  }
  return r;
}

}  // namespace

Scenario scenario_from_json(std::string const &text)
{
  Scenario s;
  try
  {
    auto j           = nlohmann::json::parse(text);
    s.n_validators   = j.at("n_validators").get<std::size_t>();
    s.seed           = j.value("seed", std::uint64_t{0});
    s.drop_rate      = j.value("drop_rate", 0.0);
    s.duplicate_rate = j.value("duplicate_rate", 0.0);
    if (j.contains("delay_distribution"))
    {
      auto const &d     = j.at("delay_distribution");
      s.min_delay_ticks = d.value("min_ticks", Tick{1});
      s.max_delay_ticks = d.value("max_ticks", s.min_delay_ticks);
    }
    for (auto const &p : j.value("partitions", nlohmann::json::array()))
    {
      Partition part;
      part.start_tick = p.at("start_tick").get<Tick>();
      part.end_tick   = p.at("end_tick").get<Tick>();
      part.groups     = p.at("groups").get<std::vector<std::vector<std::size_t>>>();
      s.partitions.push_back(std::move(part));
    }
    for (auto const &c : j.value("crash_schedule", nlohmann::json::array()))
    {
      CrashEvent e;
      e.validator  = c.at("validator").get<std::size_t>();
      e.crash_tick = c.at("crash_tick").get<Tick>();
      if (c.contains("recover_tick") && !c.at("recover_tick").is_null())
      {
        e.recover_tick = c.at("recover_tick").get<Tick>();
      }
      s.crash_schedule.push_back(e);
    }
    for (auto const &w : j.value("workload", nlohmann::json::array()))
    {
      WorkloadItem item;
      item.tick = w.at("tick").get<Tick>();
      auto op   = op_kind_from_string(w.value("op", std::string("create")));
      if (!op)
      {
        throw InvalidScenario("invalid scenario: unknown workload op");
      }
      item.op     = *op;
      item.record = record_from_json(w.at("record"));
      s.workload.push_back(std::move(item));
    }
    s.max_ticks          = j.value("max_ticks", s.max_ticks);
    s.base_timeout_ticks = j.value("base_timeout_ticks", s.base_timeout_ticks);
    s.max_timeout_ticks  = j.value("max_timeout_ticks", s.max_timeout_ticks);
    s.max_block_txs      = j.value("max_block_txs", s.max_block_txs);
  }
  catch (nlohmann::json::exception const &e)
  {
    throw InvalidScenario(std::string("invalid scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

std::string scenario_to_json(Scenario const &s)
{
  nlohmann::json j;
  j["n_validators"]       = s.n_validators;
  j["seed"]               = s.seed;
  j["drop_rate"]          = s.drop_rate;
  j["duplicate_rate"]     = s.duplicate_rate;
  j["delay_distribution"] = {{"min_ticks", s.min_delay_ticks}, {"max_ticks", s.max_delay_ticks}};
  j["partitions"]         = nlohmann::json::array();
  for (auto const &p : s.partitions)
  {
    j["partitions"].push_back(
        {{"start_tick", p.start_tick}, {"end_tick", p.end_tick}, {"groups", p.groups}});
  }
  j["crash_schedule"] = nlohmann::json::array();
  for (auto const &c : s.crash_schedule)
  {
    nlohmann::json e{{"validator", c.validator}, {"crash_tick", c.crash_tick}};
    if (c.recover_tick)
    {
      e["recover_tick"] = *c.recover_tick;
    }
    j["crash_schedule"].push_back(e);
  }
  j["workload"] = nlohmann::json::array();
  for (auto const &w : s.workload)
  {
    j["workload"].push_back({{"tick", w.tick},
                             {"op", w.op == OpKind::UpdateRecord ? "update" : "create"},
                             {"record", record_to_json(w.record)}});
  }
  j["max_ticks"]          = s.max_ticks;
  j["base_timeout_ticks"] = s.base_timeout_ticks;
  j["max_timeout_ticks"]  = s.max_timeout_ticks;
  j["max_block_txs"]      = s.max_block_txs;
  return j.dump(2);
}

Scenario load_scenario(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InvalidScenario("cannot open scenario file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

Tick last_scheduled_tick(Scenario const &s)
{
  Tick last = 0;
  for (auto const &w : s.workload)
  {
    last = std::max(last, w.tick);
  }
  for (auto const &p : s.partitions)
  {
    last = std::max(last, p.end_tick);
  }
  for (auto const &c : s.crash_schedule)
  {
    last = std::max(last, c.recover_tick.value_or(c.crash_tick));
  }
  return last;
}

bool within_tolerance(Scenario const &s)
{
  std::set<std::size_t> crashed;
  for (auto const &c : s.crash_schedule)
  {
    crashed.insert(c.validator);
  }
  return crashed.size() <= (s.n_validators - 1) / 2;
}

std::string Trace::export_lines() const
{
  std::string out;
  for (auto const &e : events)
  {
    out += std::to_string(e.tick) + '\t' + std::to_string(e.validator) + '\t' + e.kind + '\t' +
           e.digest + '\n';
  }
  for (std::size_t v = 0; v < chains.size(); ++v)
  {
    out += "final\t" + std::to_string(v) + '\t' + std::to_string(chains[v].height()) + '\t' +
           chains[v].tip_hash().hex() + '\n';
  }
  return out;
}

namespace {

std::string digest16(ByteView bytes)
{
  return sha256(bytes).hex().substr(0, 16);
}

struct InFlight
{
  std::size_t from{0};
  std::size_t to{0};
  Message     message;
  std::string digest;
};

struct SimSetup
{
  std::vector<KeyPair> validator_keys;
  KeyPair              client;
  Block                genesis;
  ChainRules           rules;
  ValidatorSet         validators;
  std::shared_ptr<SignCache> sign_cache = std::make_shared<SignCache>();
};

SimSetup make_setup(std::size_t n, std::uint64_t seed)
{
  SimSetup           s;
  std::vector<PublicKey> keys;
  for (std::size_t i = 0; i < n; ++i)
  {
    s.validator_keys.push_back(
        keygen_from_label("netsim-validator/" + std::to_string(seed) + "/" + std::to_string(i)));
    keys.push_back(s.validator_keys.back().public_key);
  }
  s.client       = keygen_from_label("netsim-client/" + std::to_string(seed));
  s.genesis      = make_genesis("netsim", 0);
  s.rules        = ChainRules::consortium(keys, block_hash(s.genesis.header));
  s.rules.verify_cache = std::make_shared<VerifyCache>();
  s.validators   = ValidatorSet(keys);
  return s;
}

TxCheck client_tx_check(KeyPair const &client, std::shared_ptr<VerifyCache> cache)
{
  auto key = client.public_key;
  auto id  = client.id();
  return [key, id, cache](Transaction const &tx) -> std::optional<std::string> {
    if (tx.actor_id != id)
    {
      return "unknown actor";
    }
    auto expected = compute_tx_hash(tx.op_kind, tx.payload, tx.actor_id, tx.timestamp_ms);
    if (expected != tx.tx_hash || !cache->verify(key, tx.tx_hash.view(), tx.signature))
    {
      return "bad signature";
    }
    return std::nullopt;
  };
}

std::vector<Engine> make_engines(SimSetup const &setup, Scenario const &s,
                                 bool discard_vote_on_timeout = false)
{
  std::vector<Engine> engines;
  for (std::size_t i = 0; i < setup.validator_keys.size(); ++i)
  {
    EngineConfig cfg;
    cfg.key                = setup.validator_keys[i];
    cfg.validators         = setup.validators;
    cfg.rules              = setup.rules;
    cfg.max_block_txs      = s.max_block_txs;
    cfg.base_timeout_ticks = s.base_timeout_ticks;
    cfg.max_timeout_ticks  = s.max_timeout_ticks;
    cfg.tx_check           = client_tx_check(setup.client, setup.rules.verify_cache);
    cfg.sign_cache         = setup.sign_cache;
    cfg.discard_vote_on_timeout = discard_vote_on_timeout;
    engines.emplace_back(std::move(cfg), ChainState(setup.genesis));
  }
  return engines;
}

bool can_talk(Scenario const &s, std::size_t a, std::size_t b, Tick t)
{
  for (auto const &p : s.partitions)
  {
    if (t < p.start_tick || t >= p.end_tick)
    {
      continue;
    }
    auto group_of = [&](std::size_t v) -> std::size_t {
      for (std::size_t g = 0; g < p.groups.size(); ++g)
      {
        if (std::find(p.groups[g].begin(), p.groups[g].end(), v) != p.groups[g].end())
        {
          return g;
        }
      }
      return p.groups.size();
    };
    if (group_of(a) != group_of(b))
    {
      return false;
    }
  }
  return true;
}

}  // namespace

Trace run_scenario(Scenario const &scenario)
{
  validate_scenario(scenario);
  auto setup   = make_setup(scenario.n_validators, scenario.seed);
  auto engines = make_engines(setup, scenario);
  auto n       = scenario.n_validators;

  Trace trace;
  trace.scenario = scenario;
  SplitMix64 rng(scenario.seed);

  std::vector<Transaction> workload_txs;
  for (auto const &w : scenario.workload)
  {
    workload_txs.push_back(seal_transaction(w.op, canonical_encode_record(w.record),
                                            setup.client.id(), w.tick,
                                            setup.client.private_key));
    trace.workload_tx_hashes.push_back(workload_txs.back().tx_hash);
  }
  std::vector<Hash32> distinct_txs = trace.workload_tx_hashes;
  std::sort(distinct_txs.begin(), distinct_txs.end());
  distinct_txs.erase(std::unique(distinct_txs.begin(), distinct_txs.end()), distinct_txs.end());

  std::vector<bool>                                         crashed(n, false);
  std::map<std::pair<Tick, std::uint64_t>, InFlight>        queue;
  std::uint64_t                                             seq = 0;
  std::vector<std::set<Hash32>>                             committed(n);
  auto                                                      last_event = last_scheduled_tick(scenario);

  auto event = [&](Tick t, std::size_t v, std::string kind, std::string digest) {
    trace.events.push_back({t, v, std::move(kind), std::move(digest)});
  };

  auto route = [&](std::size_t from, Tick t) {
    for (auto &out : engines[from].take_outbox())
    {
      auto bytes  = consensus::encode_message(out.message);
      auto digest = digest16(bytes);
      auto kind   = consensus::message_kind(out.message);
      std::vector<std::size_t> targets;
      if (out.to)
      {
        if (auto idx = setup.validators.index_of(*out.to))
        {
          targets.push_back(*idx);
        }
      }
      else
      {
        for (std::size_t v = 0; v < n; ++v)
        {
          if (v != from)
          {
            targets.push_back(v);
          }
        }
      }
      for (auto to : targets)
      {
        if (!can_talk(scenario, from, to, t))
        {
          event(t, from, "partitioned:" + kind, digest);
          continue;
        }
        if (rng.chance(scenario.drop_rate))
        {
          event(t, from, "drop:" + kind, digest);
          continue;
        }
        auto delay = rng.uniform(scenario.min_delay_ticks, scenario.max_delay_ticks);
        queue.emplace(std::pair{t + delay, seq++}, InFlight{from, to, out.message, digest});
        if (rng.chance(scenario.duplicate_rate))
        {
          auto again = rng.uniform(scenario.min_delay_ticks, scenario.max_delay_ticks);
          queue.emplace(std::pair{t + again, seq++}, InFlight{from, to, out.message, digest});
          event(t, from, "dup:" + kind, digest);
        }
      }
    }
    for (auto const &e : engines[from].take_events())
    {
      event(e.tick, from, e.kind, digest16(as_bytes(e.detail)));
    }
    for (auto &c : engines[from].take_commits())
    {
      CommitRecord rec{t, from, c.height, block_hash(c.block.header), {}};
      for (auto const &tx : c.block.transactions)
      {
        rec.tx_hashes.push_back(tx.tx_hash);
        committed[from].insert(tx.tx_hash);
      }
      trace.commits.push_back(std::move(rec));
    }
  };

  auto all_done = [&]() {
    for (std::size_t v = 0; v < n; ++v)
    {
      if (crashed[v])
      {
        continue;
      }
      for (auto const &h : distinct_txs)
      {
        if (!committed[v].contains(h))
        {
          return false;
        }
      }
    }
    return true;
  };

  Tick t = 0;
  for (; t <= scenario.max_ticks; ++t)
  {
    for (auto const &c : scenario.crash_schedule)
    {
      if (c.crash_tick == t && !crashed[c.validator])
      {
        crashed[c.validator] = true;
        event(t, c.validator, "crash", "");
      }
      if (c.recover_tick && *c.recover_tick == t && crashed[c.validator])
      {
        crashed[c.validator] = false;
        event(t, c.validator, "recover", "");
      }
    }
    for (std::size_t i = 0; i < workload_txs.size(); ++i)
    {
      if (scenario.workload[i].tick != t)
      {
        continue;
      }
      for (std::size_t v = 0; v < n; ++v)
      {
        if (!crashed[v] && engines[v].submit(workload_txs[i], t))
        {
          event(t, v, "submit", workload_txs[i].tx_hash.hex().substr(0, 16));
        }
      }
    }
    while (!queue.empty() && queue.begin()->first.first <= t)
    {
      auto msg = std::move(queue.begin()->second);
      queue.erase(queue.begin());
      if (crashed[msg.to])
      {
        event(t, msg.to, "lost:" + consensus::message_kind(msg.message), msg.digest);
        continue;
      }
      event(t, msg.to, "deliver:" + consensus::message_kind(msg.message), msg.digest);
      engines[msg.to].on_message(msg.message, t);
      route(msg.to, t);
    }
    for (std::size_t v = 0; v < n; ++v)
    {
      if (!crashed[v])
      {
        engines[v].tick(t);
        route(v, t);
      }
    }
    if (t >= last_event && all_done())
    {
      break;
    }
  }
  trace.final_tick     = std::min(t, scenario.max_ticks);
  trace.crashed_at_end = crashed;
  for (auto const &e : engines)
  {
    trace.chains.push_back(e.chain());
  }
  return trace;
}

SafetyResult check_safety(std::vector<ChainState> const &chains)
{
  std::map<std::uint64_t, std::pair<std::size_t, Hash32>> seen;
  for (std::size_t v = 0; v < chains.size(); ++v)
  {
    for (std::uint64_t h = 0; h < chains[v].size(); ++h)
    {
      auto digest     = sha256(encode_block_content(chains[v].at(h)));
      auto [it, first] = seen.emplace(h, std::pair{v, digest});
      if (!first && it->second.second != digest)
      {
        return {false, SafetyCounterexample{h, it->second.first, v, it->second.second.hex(),
                                            digest.hex()}};
      }
    }
  }
  return {};
}

SafetyResult check_safety(Trace const &trace)
{
  return check_safety(trace.chains);
}

std::string to_string(LivenessStatus status)
{
  switch (status)
  {
  case LivenessStatus::Live:
    return "live";
  case LivenessStatus::Stuck:
    return "stuck";
  case LivenessStatus::OutsideTolerance:
    return "outside tolerance";
  }
  return "unknown";
}

LivenessResult check_liveness(Trace const &trace, Tick deadline_ticks)
{
  LivenessResult result;
  if (!within_tolerance(trace.scenario))
  {
    result.status = LivenessStatus::OutsideTolerance;
    return result;
  }
  std::vector<std::map<Hash32, Tick>> first_commit(trace.chains.size());
  for (auto const &c : trace.commits)
  {
    for (auto const &h : c.tx_hashes)
    {
      first_commit[c.validator].emplace(h, c.tick);
    }
  }
  std::set<Hash32> distinct(trace.workload_tx_hashes.begin(), trace.workload_tx_hashes.end());
  for (std::size_t v = 0; v < trace.chains.size(); ++v)
  {
    if (trace.crashed_at_end[v])
    {
      continue;
    }
    for (auto const &h : distinct)
    {
      auto it = first_commit[v].find(h);
      if (it == first_commit[v].end() || it->second > deadline_ticks)
      {
        result.stuck.push_back({v, h});
      }
    }
  }
  if (!result.stuck.empty())
  {
    result.status = LivenessStatus::Stuck;
  }
  return result;
}

Scenario random_scenario(std::uint64_t seed, std::size_t n, CampaignOptions const &opt)
{
  SplitMix64 rng(seed ^ 0x5deece66dULL);
  Scenario   s;
  s.n_validators    = n;
  s.seed            = seed;
  s.drop_rate       = rng.next_unit() * opt.max_drop_rate;
  s.duplicate_rate  = rng.next_unit() * opt.max_duplicate_rate;
  s.min_delay_ticks = rng.uniform(1, 2);
  s.max_delay_ticks = s.min_delay_ticks + rng.uniform(0, 4);

  auto max_crashes = (n - 1) / 2;
  auto crashes     = rng.uniform(0, max_crashes);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    order[i] = i;
  }
  for (std::size_t i = n - 1; i > 0; --i)
  {
    std::swap(order[i], order[rng.uniform(0, i)]);
  }
  for (std::size_t i = 0; i < crashes; ++i)
  {
    CrashEvent c;
    c.validator  = order[i];
    c.crash_tick = rng.uniform(0, opt.fault_window);
    if (rng.chance(0.5))
    {
      c.recover_tick = c.crash_tick + rng.uniform(10, opt.fault_window);
    }
    s.crash_schedule.push_back(c);
  }

  auto partitions = rng.uniform(0, 2);
  Tick cursor     = 0;
  for (std::uint64_t i = 0; i < partitions; ++i)
  {
    Partition p;
    p.start_tick = cursor + rng.uniform(0, opt.fault_window / 2);
    p.end_tick   = p.start_tick + rng.uniform(10, opt.fault_window / 2);
    cursor       = p.end_tick;
    std::vector<std::size_t> side;
    for (std::size_t v = 0; v < n; ++v)
    {
      if (rng.chance(0.5))
      {
        side.push_back(v);
      }
    }
    p.groups.push_back(side);
    s.partitions.push_back(std::move(p));
  }

  auto count = rng.uniform(1, opt.max_workload);
  for (std::uint64_t i = 0; i < count; ++i)
  {
    WorkloadItem w;
    w.tick = rng.uniform(0, opt.fault_window);
    if (i > 0 && rng.chance(0.3))
    {
      w.op                = OpKind::UpdateRecord;
      auto target         = rng.uniform(0, i - 1);
      w.record.patient_id = "p" + std::to_string(target);
      w.record.name       = "patient " + std::to_string(target) + " v" + std::to_string(i);
    }
    else
    {
      w.record.patient_id = "p" + std::to_string(i);
      w.record.name       = "patient " + std::to_string(i);
    }
    w.record.visit_date = "2021-01-07";
    s.workload.push_back(std::move(w));
  }
  s.max_ticks = campaign_deadline(s) + 500;
  return s;
}

Tick campaign_deadline(Scenario const &s)
{
  return last_scheduled_tick(s) + 4000;
}

namespace {

// Engines are shared between states and copied only when they take a step.
struct ModelState
{
  std::vector<std::shared_ptr<Engine const>> engines;
  std::vector<Hash32>                        digests;  // state_digest of each engine
  std::vector<InFlight>                      in_flight;
  std::optional<std::size_t>                 crashed;
  std::size_t                                deliveries{0};
  std::size_t                                timeouts{0};
  std::size_t                                duplicates{0};
};

// What a state may still do. A crashed state can do no more than the same
// state uncrashed: the crashed validator's steps become unavailable and
// nothing else changes. One budget dominates another when every counter is
// at least as large and its crash status is no more restrictive.
struct Budget
{
  std::size_t                deliveries;
  std::size_t                timeouts;
  std::size_t                duplicates;
  std::optional<std::size_t> crashed;

  bool covers(Budget const &o) const
  {
    return deliveries >= o.deliveries && timeouts >= o.timeouts && duplicates >= o.duplicates &&
           (!crashed || crashed == o.crashed);
  }
};

class Explorer
{
public:
  explicit Explorer(ModelCheckConfig config)
    : config_(config)
  {}

  ModelCheckReport run()
  {
    Scenario s;
    s.n_validators       = config_.n_validators;
    s.base_timeout_ticks = 4;
    s.max_timeout_ticks  = 64;
    s.max_block_txs      = 4;
    setup_.emplace(make_setup(config_.n_validators, 7));

    ModelState root;
    auto       engines = make_engines(*setup_, s, config_.discard_vote_on_timeout);
    PatientRecord r;
    r.patient_id = "1";
    r.name       = "Abdur Rahim";
    auto tx      = seal_transaction(OpKind::CreateRecord, canonical_encode_record(r),
                                    setup_->client.id(), 0, setup_->client.private_key);
    for (auto &e : engines)
    {
      e.submit(tx, kNow);
      e.tick(kNow);
    }
    for (auto &e : engines)
    {
      root.engines.push_back(std::make_shared<Engine const>(std::move(e)));
      root.digests.push_back(root.engines.back()->state_digest());
    }
    for (std::size_t v = 0; v < root.engines.size(); ++v)
    {
      step(root, v, [](Engine &) {});
    }
    dfs(root, "");
    return report_;
  }

private:
  static constexpr Tick kNow = 1;

  // Runs `action` on a private copy of engine v and queues what it sends.
  // Returns whether v committed.
  template <typename F>
  bool step(ModelState &st, std::size_t v, F &&action)
  {
    auto engine = std::make_shared<Engine>(*st.engines[v]);
    action(*engine);
    for (auto &out : engine->take_outbox())
    {
      auto digest = digest16(consensus::encode_message(out.message));
      for (std::size_t to = 0; to < st.engines.size(); ++to)
      {
        bool addressed = out.to ? st.engines[to]->id() == *out.to : to != v;
        if (addressed)
        {
          st.in_flight.push_back({v, to, out.message, digest});
        }
      }
    }
    engine->take_events();
    bool committed = !engine->take_commits().empty();
    st.digests[v]  = engine->state_digest();
    st.engines[v]  = std::move(engine);
    return committed;
  }

  Hash32 fingerprint(ModelState const &st) const
  {
    Sha256 h;
    for (auto const &d : st.digests)
    {
      h.update(d.view());
    }
    std::vector<std::string> msgs;
    msgs.reserve(st.in_flight.size());
    for (auto const &m : st.in_flight)
    {
      msgs.push_back(std::to_string(m.to) + ':' + m.digest);
    }
    std::sort(msgs.begin(), msgs.end());
    for (auto const &m : msgs)
    {
      h.update(as_bytes(m));
    }
    return h.finish();
  }

  Budget remaining(ModelState const &st) const
  {
    return {config_.max_deliveries - st.deliveries, config_.max_timeouts - st.timeouts,
            config_.max_duplicates - st.duplicates, st.crashed};
  }

  // True if the state was already explored with at least this much budget.
  bool dominated(Hash32 const &fp, Budget const &budget)
  {
    auto &seen = visited_[fp];
    for (auto const &b : seen)
    {
      if (b.covers(budget))
      {
        return true;
      }
    }
    seen.push_back(budget);
    return false;
  }

  void check(ModelState const &st, std::string const &path)
  {
    std::vector<ChainState> chains;
    for (auto const &e : st.engines)
    {
      chains.push_back(e->chain());
      report_.max_commits = std::max<std::uint64_t>(report_.max_commits, e->chain().height());
    }
    if (!check_safety(chains).safe)
    {
      ++report_.violations;
      if (!report_.counterexample)
      {
        report_.counterexample = path;
      }
    }
  }

  void dfs(ModelState const &st, std::string const &path)
  {
    if (dominated(fingerprint(st), remaining(st)))
    {
      return;
    }
    ++report_.states;

    auto visit = [&](ModelState const &next, bool committed, std::string const &label) {
      ++report_.transitions;
      // commits are the only steps that can break agreement
      if (committed)
      {
        check(next, path + label);
      }
      dfs(next, path + label);
    };

    if (st.deliveries < config_.max_deliveries)
    {
      // identical copies of a message to the same validator are interchangeable
      std::set<std::pair<std::size_t, std::string>> tried;
      for (std::size_t i = 0; i < st.in_flight.size(); ++i)
      {
        auto const &m = st.in_flight[i];
        // delivering to a crashed validator is indistinguishable from loss
        if (st.crashed == m.to || !tried.emplace(m.to, m.digest).second)
        {
          continue;
        }
        for (int dup = 0; dup < 2; ++dup)
        {
          if (dup == 1 && st.duplicates >= config_.max_duplicates)
          {
            continue;
          }
          ModelState next = st;
          auto       msg  = next.in_flight[i];
          if (dup == 0)
          {
            next.in_flight.erase(next.in_flight.begin() + static_cast<std::ptrdiff_t>(i));
          }
          else
          {
            ++next.duplicates;
          }
          ++next.deliveries;
          bool committed =
              step(next, msg.to, [&](Engine &e) { e.on_message(msg.message, kNow); });
          visit(next, committed,
                std::string(dup ? " dup(" : " deliver(") + std::to_string(msg.from) + "->" +
                    std::to_string(msg.to) + ":" + consensus::message_kind(msg.message) + ")");
        }
      }
    }
    if (st.timeouts < config_.max_timeouts)
    {
      for (std::size_t v = 0; v < st.engines.size(); ++v)
      {
        if (st.crashed == v)
        {
          continue;
        }
        ModelState next = st;
        ++next.timeouts;
        bool committed = step(next, v, [](Engine &e) { e.handle_timeout(e.height(), e.round(), kNow); });
        visit(next, committed, " timeout(" + std::to_string(v) + ")");
      }
    }
    if (config_.allow_crash && !st.crashed)
    {
      for (std::size_t v = 0; v < st.engines.size(); ++v)
      {
        // messages already sent by v stay in flight; v itself goes silent
        ModelState next = st;
        next.crashed    = v;
        visit(next, false, " crash(" + std::to_string(v) + ")");
      }
    }
  }

  ModelCheckConfig                                 config_;
  std::optional<SimSetup>                          setup_;
  std::unordered_map<Hash32, std::vector<Budget>> visited_;
  ModelCheckReport                                 report_;
};

}  // namespace

ModelCheckReport explore_schedules(ModelCheckConfig const &config)
{
  return Explorer(config).run();
}

}  // namespace ledgerehr::netsim
