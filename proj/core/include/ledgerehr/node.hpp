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

#include "ledgerehr/consensus.hpp"
#include "ledgerehr/identity.hpp"
#include "ledgerehr/ledger.hpp"
#include "ledgerehr/projection.hpp"
#include "ledgerehr/record.hpp"
#include "ledgerehr/transaction.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ledgerehr {

inline constexpr std::uint64_t kReplayWindowMs   = 300'000;
inline constexpr std::size_t   kExplorerPageSize = 25;

struct ValidatorEntry
{
  PublicKey   public_key;
  std::string url;  // base URL of the peer, e.g. http://10.0.0.2:8080
};

/// Identity known from genesis, before any RegisterIdentity transaction.
struct BootstrapIdentity
{
  PublicKey                  public_key;
  Role                       role{Role::Organizational};
  std::optional<std::string> linked_patient_id;
};

struct NodeConfig
{
  std::string                    network_name{"ledgerehr"};
  std::uint64_t                  genesis_time_ms{0};
  std::vector<ValidatorEntry>    validators;
  std::vector<BootstrapIdentity> identities;
  std::filesystem::path          key_path;  // this validator's seed file
  std::string                    listen_host{"127.0.0.1"};
  int                            listen_port{8080};
  std::filesystem::path          data_dir;  // empty: in-memory only
  ChainMode                      mode{ChainMode::Consortium};
  unsigned                       pow_difficulty_bits{12};
  std::size_t                    max_block_txs{16};
  consensus::Tick                base_timeout_ticks{10};
  consensus::Tick                max_timeout_ticks{160};
  std::uint64_t                  tick_ms{20};
};

class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Relative key_path and data_dir are resolved against the config file's
/// directory by load_node_config. Throws ConfigError.
NodeConfig  node_config_from_json(std::string const &text);
std::string node_config_to_json(NodeConfig const &config);
NodeConfig  load_node_config(std::filesystem::path const &path);

/// Everything needed to re-validate a data directory offline.
struct ChainDescriptor
{
  std::string                    network_name;
  std::uint64_t                  genesis_time_ms{0};
  ChainMode                      mode{ChainMode::Consortium};
  unsigned                       pow_difficulty_bits{0};
  std::vector<PublicKey>         validators;
  std::vector<BootstrapIdentity> identities;
  Hash32                         genesis_hash;
};

ChainDescriptor descriptor_of(NodeConfig const &config);
Block           genesis_of(ChainDescriptor const &descriptor);
ChainRules      rules_of(ChainDescriptor const &descriptor);

std::filesystem::path descriptor_path(std::filesystem::path const &data_dir);
std::filesystem::path block_log_path(std::filesystem::path const &data_dir);

void            write_descriptor(std::filesystem::path const &data_dir, ChainDescriptor const &d);
ChainDescriptor read_descriptor(std::filesystem::path const &data_dir);

/// Identities from genesis plus every committed RegisterIdentity, in chain
/// order. Registrations that no longer apply are skipped.
Registry rebuild_registry(std::vector<BootstrapIdentity> const &bootstrap, ChainState const &chain);

struct ApiRequest
{
  std::string                        method;
  std::string                        path;  // percent-decoded
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lowercase names
  std::string                        body;
};

struct ApiResponse
{
  int         status{200};
  std::string content_type{"application/json"};
  std::string body;
};

/// SHA-256(body || timestamp header text); X-Signature is Ed25519 over it.
Hash32 request_digest(std::string_view body, std::string_view timestamp);

using Headers = std::map<std::string, std::string>;

/// X-Actor-Id, X-Timestamp and X-Signature for `body`.
Headers sign_request(KeyPair const &actor, std::string_view body, std::uint64_t timestamp_ms);

/// A ready-to-send mutation. The transaction timestamp is the request
/// timestamp, and X-Tx-Signature carries the actor's signature over tx_hash.
struct SignedCall
{
  std::string body;
  Headers     headers;
  Hash32      tx_hash;
};

SignedCall record_call(KeyPair const &actor, PatientRecord const &record, OpKind op,
                       std::uint64_t timestamp_ms);
SignedCall registration_call(KeyPair const &admin, StakeholderIdentity const &identity,
                             std::uint64_t timestamp_ms);

/// JSON object keyed by kRecordFieldNames.
std::string   record_to_json(PatientRecord const &record);
PatientRecord record_from_json(std::string const &text);

using Clock = std::function<std::uint64_t()>;
std::uint64_t system_clock_ms();

/// Outbound consensus frame; `to` empty means every other validator.
using PeerSender = std::function<void(std::optional<IdentityId> const &to, Bytes frame)>;

/// One validator: consensus engine, committed ledger, derived views and the
/// HTTP API surface. Thread-safe; every mutation goes through one lock.
class Node
{
public:
  Node(NodeConfig config, KeyPair validator_key, Clock clock = system_clock_ms);

  ApiResponse handle(ApiRequest const &request);

  void set_peer_sender(PeerSender sender);

  /// Advances consensus to the clock and flushes outbound frames.
  void tick();

  /// A consensus frame from an authenticated peer.
  void deliver(ByteView frame);

  IdentityId    id() const;
  std::uint64_t height() const;
  Hash32        tip_hash() const;
  std::size_t   pool_size() const;
  ChainState    chain() const;
  Registry      registry() const;

  NodeConfig const &config() const
  {
    return config_;
  }

private:
  struct Views;

  std::optional<std::string> check_tx(Transaction const &tx) const;
  void                       drain();
  void                       apply_commit(Block const &block);
  consensus::Tick            now_tick() const;

  ApiResponse submit_record(IdentityId const &actor, ApiRequest const &req, OpKind op,
                            std::optional<std::string> const &path_id);
  ApiResponse submit_registration(IdentityId const &actor, ApiRequest const &req);
  ApiResponse submit(Transaction tx, std::vector<RecordViolation> const &warnings);
  ApiResponse list_patients(IdentityId const &actor);
  ApiResponse get_patient(IdentityId const &actor, std::string const &id);
  ApiResponse explorer_page(IdentityId const &actor, ApiRequest const &req);
  ApiResponse explorer_tx(IdentityId const &actor, std::string const &hash, bool proof);
  ApiResponse explorer_block(IdentityId const &actor, std::string const &height,
                             ApiRequest const &req);
  ApiResponse verify(IdentityId const &actor);

  NodeConfig          config_;
  KeyPair             key_;
  Clock               clock_;
  ChainDescriptor     descriptor_;
  ChainRules          rules_;
  consensus::ValidatorSet validators_;

  mutable std::mutex                 mutex_;
  std::optional<Ledger>              ledger_;
  std::unique_ptr<consensus::Engine> engine_;
  Registry                           registry_;
  std::shared_ptr<Views const>       views_;
  PeerSender                         sender_;
  std::vector<std::pair<std::optional<IdentityId>, Bytes>> pending_out_;
};

/// Routes frames between in-process nodes through a FIFO queue.
class LocalNetwork
{
public:
  /// Replaces an earlier node with the same id (a restart).
  void add(Node &node);

  /// Drops frames to and from the node while set.
  void set_down(IdentityId const &id, bool down);

  /// Delivers queued frames until none remain. Returns frames delivered.
  std::size_t pump();

private:
  struct Frame
  {
    IdentityId                from;
    std::optional<IdentityId> to;
    Bytes                     bytes;
  };

  std::mutex              mutex_;
  std::vector<Node *>     nodes_;
  std::set<IdentityId>    down_;
  std::deque<Frame>       queue_;
};

/// Posts frames to peer URLs from a background thread, signed with the
/// validator key. Unreachable peers are skipped; consensus retries.
class HttpPeerSender
{
public:
  HttpPeerSender(KeyPair key, std::vector<ValidatorEntry> peers, Clock clock = system_clock_ms);
  ~HttpPeerSender();
  HttpPeerSender(HttpPeerSender const &)            = delete;
  HttpPeerSender &operator=(HttpPeerSender const &) = delete;

  void send(std::optional<IdentityId> const &to, Bytes frame);
  void set_url(IdentityId const &id, std::string url);

private:
  void run();

  KeyPair                                 key_;
  Clock                                   clock_;
  std::mutex                              mutex_;
  std::condition_variable                 cv_;
  std::map<IdentityId, std::string>       urls_;
  std::deque<std::pair<std::string, Bytes>> queue_;
  bool                                    stopping_{false};
  std::thread                             worker_;
};

/// HTTP front end plus the ticker thread for one Node.
class NodeServer
{
public:
  explicit NodeServer(Node &node);
  ~NodeServer();
  NodeServer(NodeServer const &)            = delete;
  NodeServer &operator=(NodeServer const &) = delete;

  /// Binds (port 0 picks a free port) and starts serving. Returns the port.
  int  start(std::string const &host, int port);
  void stop();
  int  port() const
  {
    return port_;
  }

private:
  struct Impl;
  Node                 &node_;
  std::unique_ptr<Impl> impl_;
  int                   port_{0};
};

}  // namespace ledgerehr
