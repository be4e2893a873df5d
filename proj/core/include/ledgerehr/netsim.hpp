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
#include "ledgerehr/ledger.hpp"
#include "ledgerehr/record.hpp"
#include "ledgerehr/transaction.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ledgerehr::netsim {

using consensus::Tick;

/// SplitMix64 (Steele, Lea, Flood): 64-bit state advanced by the golden-ratio
/// increment, output through the Stafford variant-13 mixer. Fully specified,
/// so traces replay across implementations.
class SplitMix64
{
public:
  explicit SplitMix64(std::uint64_t seed)
    : state_(seed)
  {}

  std::uint64_t next();

  /// Uniform in [0, 1) from the top 53 bits.
  double next_unit();

  /// Uniform in [lo, hi], inclusive.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

  bool chance(double p)
  {
    return next_unit() < p;
  }

private:
  std::uint64_t state_;
};

struct Partition
{
  Tick start_tick{0};
  Tick end_tick{0};
  /// Validators in different groups cannot exchange messages while the
  /// partition is active. Unlisted validators form one extra group.
  std::vector<std::vector<std::size_t>> groups;
};

struct CrashEvent
{
  std::size_t         validator{0};
  Tick                crash_tick{0};
  std::optional<Tick> recover_tick;
};

struct WorkloadItem
{
  Tick          tick{0};
  OpKind        op{OpKind::CreateRecord};
  PatientRecord record;
};

struct Scenario
{
  std::size_t               n_validators{4};
  std::uint64_t             seed{0};
  double                    drop_rate{0.0};
  Tick                      min_delay_ticks{1};
  Tick                      max_delay_ticks{1};
  double                    duplicate_rate{0.0};
  std::vector<Partition>    partitions;
  std::vector<CrashEvent>   crash_schedule;
  std::vector<WorkloadItem> workload;

  Tick        max_ticks{5000};
  Tick        base_timeout_ticks{8};
  Tick        max_timeout_ticks{128};
  std::size_t max_block_txs{4};
};

class InvalidScenario : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

void validate_scenario(Scenario const &scenario);

/// JSON document with the Scenario field names; "delay_distribution" is
/// {"min_ticks", "max_ticks"}. Throws InvalidScenario.
Scenario    scenario_from_json(std::string const &text);
std::string scenario_to_json(Scenario const &scenario);
Scenario    load_scenario(std::filesystem::path const &path);

/// Last tick at which the schedule itself changes anything.
Tick last_scheduled_tick(Scenario const &scenario);

/// The fault model stays within what the protocol tolerates:
/// crashed validators <= floor((N - 1) / 2).
bool within_tolerance(Scenario const &scenario);

struct TraceEvent
{
  Tick        tick{0};
  std::size_t validator{0};
  std::string kind;
  std::string digest;
};

struct CommitRecord
{
  Tick                tick{0};
  std::size_t         validator{0};
  std::uint64_t       height{0};
  Hash32              block_hash;
  std::vector<Hash32> tx_hashes;
};

struct Trace
{
  Scenario                  scenario;
  std::vector<TraceEvent>   events;
  std::vector<CommitRecord> commits;
  std::vector<ChainState>   chains;  // final chain of every validator
  std::vector<Hash32>       workload_tx_hashes;
  std::vector<bool>         crashed_at_end;
  Tick                      final_tick{0};

  /// One "tick<TAB>validator<TAB>kind<TAB>digest" line per event, then one
  /// line per validator with its final height and tip hash.
  std::string export_lines() const;
};

/// Throws InvalidScenario.
Trace run_scenario(Scenario const &scenario);

struct SafetyCounterexample
{
  std::uint64_t height{0};
  std::size_t   validator_a{0};
  std::size_t   validator_b{0};
  std::string   digest_a;
  std::string   digest_b;
};

struct SafetyResult
{
  bool                                safe{true};
  std::optional<SafetyCounterexample> counterexample;
};

/// True iff at every height every validator that committed a block committed
/// the same header and transactions.
SafetyResult check_safety(std::vector<ChainState> const &chains);
SafetyResult check_safety(Trace const &trace);

enum class LivenessStatus
{
  Live,
  Stuck,
  OutsideTolerance,
};

std::string to_string(LivenessStatus status);

struct StuckTransaction
{
  std::size_t validator{0};
  Hash32      tx_hash;
};

struct LivenessResult
{
  LivenessStatus                status{LivenessStatus::Live};
  std::vector<StuckTransaction> stuck;

  bool live() const
  {
    return status == LivenessStatus::Live;
  }
};

/// Every workload transaction committed on every validator that is not
/// crashed at the end of the run, at or before `deadline_ticks`.
LivenessResult check_liveness(Trace const &trace, Tick deadline_ticks);

struct CampaignOptions
{
  double      max_drop_rate{0.3};
  double      max_duplicate_rate{0.1};
  std::size_t max_workload{8};
  Tick        fault_window{400};
};

/// Seeded adversarial scenario within the tolerance envelope: crashes
/// <= floor((N-1)/2), partitions that heal, bounded drop/duplicate rates.
Scenario random_scenario(std::uint64_t seed, std::size_t n_validators,
                         CampaignOptions const &options = {});

/// Liveness deadline used for random_scenario runs.
Tick campaign_deadline(Scenario const &scenario);

struct ModelCheckConfig
{
  std::size_t n_validators{3};
  std::size_t max_deliveries{6};
  std::size_t max_timeouts{2};
  std::size_t max_duplicates{0};
  bool        allow_crash{true};
  /// Negative control: run the engines with the vote-discarding timeout rule.
  bool discard_vote_on_timeout{false};
};

struct ModelCheckReport
{
  std::uint64_t              states{0};
  std::uint64_t              transitions{0};
  std::uint64_t              max_commits{0};
  std::uint64_t              violations{0};
  std::optional<std::string> counterexample;
};

/// Exhaustive exploration of every interleaving of message deliveries,
/// duplicate deliveries, timeouts and one crash, bounded by `config`, from a
/// single pooled transaction. Any undelivered message counts as lost. Safety
/// is checked after every commit.
ModelCheckReport explore_schedules(ModelCheckConfig const &config);

}  // namespace ledgerehr::netsim
