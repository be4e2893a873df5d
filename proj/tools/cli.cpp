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

#include "cli.hpp"

#include "ledgerehr/merkle.hpp"
#include "ledgerehr/netsim.hpp"
#include "ledgerehr/node.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace ledgerehr::cli {

namespace {

constexpr char const *kVerbList = "keygen, start, inspect, verify, tamper, simulate";

std::uint64_t parse_number(std::string const &flag, std::string const &text)
{
  try
  {
    std::size_t used = 0;
    auto        v    = std::stoull(text, &used, 0);
    if (used != text.size() || text.front() == '-')
    {
      throw std::invalid_argument(text);
    }
    return v;
  }
  catch (std::exception const &)
  {
    throw UsageError(flag + ": expected a non-negative integer, got '" + text + "'");
  }
}

bool is_hex(std::string const &s)
{
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c) != 0; });
}

Seed seed_from_hex(std::string const &hex)
{
  auto  bytes = from_hex(hex);
  Seed  seed{};
  std::copy(bytes.begin(), bytes.end(), seed.begin());
  return seed;
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

// ---------------------------------------------------------------------------

int keygen_verb(CliCommand const &c, std::ostream &out, std::ostream &err)
{
  if (std::filesystem::exists(c.out) && !c.force)
  {
    err << "ledgerehr keygen: " << c.out << " exists; pass --force to overwrite\n";
    return kExitFailure;
  }
  KeyPair key = c.seed    ? keygen(seed_from_hex(*c.seed))
                : c.label ? keygen_from_label(*c.label)
                          : keygen();
  write_seed_file(c.out, key.private_key.seed());
  out << "identity_id " << key.id().hex() << "\n"
      << "public_key " << key.public_key.hex() << "\n"
      << "seed_file " << c.out << "\n";
  return kExitOk;
}

int start_verb(CliCommand const &c, Environment const &env, std::ostream &out)
{
  auto config = load_node_config(c.config);
  if (config.key_path.empty())
  {
    throw ConfigError("config has no key_path");
  }
  auto           key = keygen(read_seed_file(config.key_path));
  Node           node(config, key);
  HttpPeerSender sender(key, config.validators);
  node.set_peer_sender(
      [&sender](std::optional<IdentityId> const &to, Bytes frame) { sender.send(to, std::move(frame)); });
  NodeServer server(node);
  auto       port = server.start(config.listen_host, config.listen_port);
  out << "listening " << config.listen_host << ":" << port << " validator=" << key.id().hex()
      << " height=" << node.height() << std::endl;

  auto started = std::chrono::steady_clock::now();
  while (true)
  {
    if (env.stop_requested && env.stop_requested())
    {
      break;
    }
    if (c.run_ms && std::chrono::steady_clock::now() - started >= std::chrono::milliseconds(*c.run_ms))
    {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  server.stop();
  node.set_peer_sender({});
  out << "stopped height=" << node.height() << " tip=" << node.tip_hash().hex() << "\n";
  return kExitOk;
}

void print_block_line(std::ostream &out, Block const &b)
{
  out << "block " << b.header.height << " hash=" << block_hash(b.header).hex()
      << " txs=" << b.transactions.size() << " timestamp_ms=" << b.header.timestamp_ms
      << " signatures=" << b.commit_signatures.size() << "\n";
}

void print_block(std::ostream &out, Block const &b)
{
  auto const &h = b.header;
  out << "height " << h.height << "\n"
      << "hash " << block_hash(h).hex() << "\n"
      << "version " << h.version << "\n"
      << "prev_hash " << h.prev_hash.hex() << "\n"
      << "timestamp_ms " << h.timestamp_ms << "\n"
      << "body_root " << h.body_root.hex() << "\n"
      << "target " << h.target.hex() << "\n"
      << "nonce " << h.nonce << "\n"
      << "proposer_id " << h.proposer_id.hex() << "\n"
      << "signatures " << b.commit_signatures.size() << "\n";
  for (auto const &s : b.commit_signatures)
  {
    out << "  signer " << s.validator_id.hex() << "\n";
  }
  for (std::size_t i = 0; i < b.transactions.size(); ++i)
  {
    auto const &tx = b.transactions[i];
    out << "tx " << i << " " << tx.tx_hash.hex() << " " << to_string(tx.op_kind)
        << " actor=" << tx.actor_id.hex() << " timestamp_ms=" << tx.timestamp_ms;
    if (auto p = patient_of(tx))
    {
      out << " patient=" << *p;
    }
    out << "\n";
  }
}

void print_tx(std::ostream &out, Block const &b, std::size_t index)
{
  auto const &tx = b.transactions[index];
  out << "tx_hash " << tx.tx_hash.hex() << "\n"
      << "block " << b.header.height << "\n"
      << "index " << index << "\n"
      << "method " << to_string(tx.op_kind) << "\n"
      << "actor " << tx.actor_id.hex() << "\n"
      << "timestamp_ms " << tx.timestamp_ms << "\n";
  if (tx.op_kind == OpKind::RegisterIdentity)
  {
    auto reg = decode_registration(tx.payload);
    out << "registers " << reg.identity.identity_id.hex() << " role=" << to_string(reg.identity.role);
    if (reg.identity.linked_patient_id)
    {
      out << " patient=" << *reg.identity.linked_patient_id;
    }
    out << "\n";
  }
  else
  {
    auto record = decode_record(tx.payload);
    auto fields = record_fields(record);
    for (std::size_t i = 0; i < kRecordFieldCount; ++i)
    {
      out << "  " << kRecordFieldNames[i] << " = " << *fields[i] << "\n";
    }
  }
  auto leaves = transaction_leaves(b.transactions);
  auto proof  = merkle::prove(leaves, index);
  for (auto const &s : proof.siblings)
  {
    out << "sibling " << (s.side == merkle::Side::Left ? "left " : "right ") << s.sibling.hex()
        << "\n";
  }
  bool ok = merkle::verify_proof(b.header.body_root, leaves[index], proof);
  out << "proof " << (ok ? "valid" : "INVALID") << " body_root=" << b.header.body_root.hex() << "\n";
}

int inspect_verb(CliCommand const &c, std::ostream &out, std::ostream &err)
{
  auto d      = read_descriptor(c.data);
  auto log    = read_file(block_log_path(c.data));
  auto replay = replay_log(log);
  auto fault  = [&] {
    if (replay.fault)
    {
      err << "ledgerehr inspect: log unreadable from height " << replay.fault->height << " (offset "
          << replay.fault->offset << "): " << replay.fault->message << "\n";
    }
    return replay.fault ? kExitFailure : kExitOk;
  };

  if (c.height)
  {
    if (*c.height >= replay.blocks.size())
    {
      err << "ledgerehr inspect: no block at height " << *c.height << " (log holds "
          << replay.blocks.size() << " blocks)\n";
      return kExitFailure;
    }
    print_block(out, replay.blocks[*c.height]);
    return kExitOk;
  }
  if (c.tx)
  {
    for (auto const &b : replay.blocks)
    {
      for (std::size_t i = 0; i < b.transactions.size(); ++i)
      {
        if (b.transactions[i].tx_hash.hex() == *c.tx)
        {
          print_tx(out, b, i);
          return kExitOk;
        }
      }
    }
    err << "ledgerehr inspect: transaction " << *c.tx << " not found\n";
    return kExitFailure;
  }

  out << "network " << d.network_name << "\n"
      << "mode " << to_string(d.mode) << "\n"
      << "genesis_time_ms " << d.genesis_time_ms << "\n"
      << "genesis_hash " << d.genesis_hash.hex() << "\n"
      << "validators " << d.validators.size() << "\n";
  for (auto const &k : d.validators)
  {
    out << "  " << identity_of(k).hex() << " " << k.hex() << "\n";
  }
  out << "bootstrap_identities " << d.identities.size() << "\n";
  for (auto const &i : d.identities)
  {
    out << "  " << identity_of(i.public_key).hex() << " " << to_string(i.role);
    if (i.linked_patient_id)
    {
      out << " patient=" << *i.linked_patient_id;
    }
    out << "\n";
  }
  if (!replay.blocks.empty())
  {
    out << "height " << replay.blocks.size() - 1 << "\n"
        << "tip " << block_hash(replay.blocks.back().header).hex() << "\n";
  }
  for (auto const &b : replay.blocks)
  {
    print_block_line(out, b);
  }
  return fault();
}

int verify_verb(CliCommand const &c, std::ostream &out)
{
  auto d      = read_descriptor(c.data);
  auto report = verify_log(read_file(block_log_path(c.data)), rules_of(d));
  if (report.ok)
  {
    out << "OK height=" << report.height << "\n";
    return kExitOk;
  }
  out << "FAILED height=" << report.failed_height.value_or(report.height) << " reason=" << report.reason
      << "\n";
  return kExitFailure;
}

int tamper_verb(CliCommand const &c, std::ostream &err)
{
  auto path = block_log_path(c.data);
  err << "WARNING: deliberately corrupting " << path.string() << " at height " << *c.height
      << " offset " << c.offset << " (xor 0x" << std::hex << static_cast<int>(c.mask) << std::dec
      << "). This chain will no longer verify.\n";
  tamper_log(path, *c.height, c.offset, c.mask);
  return kExitOk;
}

int simulate_verb(CliCommand const &c, std::ostream &out)
{
  auto scenario = netsim::load_scenario(c.scenario);
  auto trace    = netsim::run_scenario(scenario);
  if (c.trace_out)
  {
    std::ofstream(*c.trace_out, std::ios::trunc) << trace.export_lines();
  }
  auto safety   = netsim::check_safety(trace);
  auto deadline = c.deadline.value_or(scenario.max_ticks);
  auto liveness = netsim::check_liveness(trace, deadline);

  out << "validators " << scenario.n_validators << " seed " << scenario.seed << " ticks "
      << trace.final_tick << "\n";
  if (safety.safe)
  {
    out << "safety safe\n";
  }
  else
  {
    auto const &x = *safety.counterexample;
    out << "safety VIOLATED height=" << x.height << " validators=" << x.validator_a << ","
        << x.validator_b << "\n";
  }
  out << "liveness " << to_string(liveness.status);
  if (!liveness.stuck.empty())
  {
    out << " stuck=" << liveness.stuck.size();
  }
  out << " deadline=" << deadline << "\n";

  std::vector<std::size_t> commits(scenario.n_validators, 0);
  for (auto const &cr : trace.commits)
  {
    ++commits.at(cr.validator);
  }
  for (std::size_t v = 0; v < trace.chains.size(); ++v)
  {
    std::size_t txs = 0;
    for (auto const &b : trace.chains[v].blocks())
    {
      txs += b->transactions.size();
    }
    out << "validator " << v << " height=" << trace.chains[v].height() << " commits=" << commits[v]
        << " txs=" << txs << (trace.crashed_at_end[v] ? " crashed" : "") << "\n";
  }
  out << "workload " << trace.workload_tx_hashes.size() << "\n";

  bool failed = !safety.safe || liveness.status == netsim::LivenessStatus::Stuck;
  return failed ? kExitFailure : kExitOk;
}

}  // namespace

std::string to_string(Verb verb)
{
  switch (verb)
  {
  case Verb::Help: return "help";
  case Verb::Keygen: return "keygen";
  case Verb::Start: return "start";
  case Verb::Inspect: return "inspect";
  case Verb::Verify: return "verify";
  case Verb::Tamper: return "tamper";
  case Verb::Simulate: return "simulate";
  }
  return "unknown";
}

CliCommand parse_args(std::vector<std::string> const &args, Environment const &env)
{
  CliCommand c;
  CLI::App   app{"ledgerehr: permissioned EHR ledger node and operator tools", "ledgerehr"};
  app.require_subcommand(1, 1);
  app.fallthrough(false);

  std::string seed, label, mask = "0x01", height, offset, run_ms, deadline, tx, trace_out;

  auto *keygen = app.add_subcommand("keygen", "Generate a key seed file and print its identity");
  keygen->add_option("--out", c.out, "Seed file to write")->required();
  auto *seed_opt  = keygen->add_option("--seed", seed, "32-byte seed as 64 hex characters");
  auto *label_opt = keygen->add_option("--label", label, "Derive the seed from SHA-256(label)");
  seed_opt->excludes(label_opt);
  keygen->add_flag("--force", c.force, "Overwrite an existing file");

  auto *start = app.add_subcommand("start", "Run a validator node");
  start->add_option("--config", c.config, "Node config JSON (default: $LEDGEREHR_CONFIG)");
  auto *run_opt = start->add_option("--run-ms", run_ms, "Stop after this many milliseconds");

  auto *inspect = app.add_subcommand("inspect", "Print chain contents from a data directory");
  inspect->add_option("--data", c.data, "Node data directory")->required();
  auto *ih_opt = inspect->add_option("--height", height, "Show one block");
  auto *tx_opt = inspect->add_option("--tx", tx, "Show one transaction with its Merkle proof");
  ih_opt->excludes(tx_opt);

  auto *verify = app.add_subcommand("verify", "Re-validate the stored chain");
  verify->add_option("--data", c.data, "Node data directory")->required();

  auto *tamper = app.add_subcommand("tamper", "Corrupt one byte of the block log (testing only)");
  tamper->add_option("--data", c.data, "Node data directory")->required();
  tamper->add_option("--height", height, "Block frame to corrupt")->required();
  tamper->add_option("--offset", offset, "Byte offset inside the encoded block")->required();
  tamper->add_option("--mask", mask, "XOR mask, default 0x01");

  auto *simulate = app.add_subcommand("simulate", "Run a network scenario and check it");
  simulate->add_option("--scenario", c.scenario, "Scenario JSON")->required();
  auto *trace_opt = simulate->add_option("--trace-out", trace_out, "Write the event trace here");
  auto *dl_opt    = simulate->add_option("--deadline", deadline, "Liveness deadline in ticks");

  if (args.empty())
  {
    throw UsageError(std::string("missing verb; expected one of: ") + kVerbList);
  }
  auto const &first = args.front();
  if (first != "-h" && first != "--help" && !app.get_subcommand_no_throw(first))
  {
    throw UsageError("unknown verb '" + first + "'; expected one of: " + kVerbList);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try
  {
    app.parse(reversed);
  }
  catch (CLI::CallForHelp const &)
  {
    c.verb      = Verb::Help;
    c.help_text = app.help();
    return c;
  }
  catch (CLI::ParseError const &e)
  {
    throw UsageError(e.what());
  }

  if (keygen->parsed())
  {
    c.verb = Verb::Keygen;
    if (seed_opt->count() > 0)
    {
      if (seed.size() != 64 || !is_hex(seed))
      {
        throw UsageError("--seed: expected 64 hex characters");
      }
      c.seed = seed;
    }
    if (label_opt->count() > 0)
    {
      c.label = label;
    }
  }
  else if (start->parsed())
  {
    c.verb = Verb::Start;
    if (c.config.empty())
    {
      if (!env.config_path || env.config_path->empty())
      {
        throw UsageError("--config is required (or set LEDGEREHR_CONFIG)");
      }
      c.config = *env.config_path;
    }
    if (run_opt->count() > 0)
    {
      c.run_ms = parse_number("--run-ms", run_ms);
    }
  }
  else if (inspect->parsed())
  {
    c.verb = Verb::Inspect;
    if (ih_opt->count() > 0)
    {
      c.height = parse_number("--height", height);
    }
    if (tx_opt->count() > 0)
    {
      c.tx = tx;
    }
  }
  else if (verify->parsed())
  {
    c.verb = Verb::Verify;
  }
  else if (tamper->parsed())
  {
    c.verb   = Verb::Tamper;
    c.height = parse_number("--height", height);
    c.offset = static_cast<std::size_t>(parse_number("--offset", offset));
    auto m   = parse_number("--mask", mask);
    if (m == 0 || m > 0xff)
    {
      throw UsageError("--mask: expected a value in 1..0xff");
    }
    c.mask = static_cast<std::uint8_t>(m);
  }
  else if (simulate->parsed())
  {
    c.verb = Verb::Simulate;
    if (trace_opt->count() > 0)
    {
      c.trace_out = trace_out;
    }
    if (dl_opt->count() > 0)
    {
      c.deadline = parse_number("--deadline", deadline);
    }
  }
  return c;
}

int execute(CliCommand const &c, Environment const &env, std::ostream &out, std::ostream &err)
{
  try
  {
    switch (c.verb)
    {
    case Verb::Help: out << c.help_text; return kExitOk;
    case Verb::Keygen: return keygen_verb(c, out, err);
    case Verb::Start: return start_verb(c, env, out);
    case Verb::Inspect: return inspect_verb(c, out, err);
    case Verb::Verify: return verify_verb(c, out);
    case Verb::Tamper: return tamper_verb(c, err);
    case Verb::Simulate: return simulate_verb(c, out);
    }
  }
  catch (std::exception const &e)
  {
    err << "ledgerehr " << to_string(c.verb) << ": " << e.what() << "\n";
  }
  return kExitFailure;
}

int run(std::vector<std::string> const &args, Environment const &env, std::ostream &out,
        std::ostream &err)
{
  CliCommand command;
  try
  {
    command = parse_args(args, env);
  }
  catch (UsageError const &e)
  {
    err << "ledgerehr: " << e.what() << "\n";
    return kExitUsage;
  }
  return execute(command, env, out, err);
}

}  // namespace ledgerehr::cli
