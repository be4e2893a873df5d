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
#include "ledgerehr/record.hpp"
#include "ledgerehr/transaction.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace ledgerehr::testing {

/// The ten reference patient rows, column order as in PatientRecord.
std::array<PatientRecord, 10> const &table_rows();

PatientRecord random_record(std::mt19937_64 &rng, std::string patient_id);
std::string   random_string(std::mt19937_64 &rng, std::size_t max_len);
Bytes         random_bytes(std::mt19937_64 &rng, std::size_t max_len);

/// A consortium of deterministic validator keys plus one organizational client.
struct Consortium
{
  explicit Consortium(std::size_t n_validators, std::string const &network = "ledgerehr-test");

  std::vector<KeyPair> validators;
  KeyPair              client;
  Block                genesis;
  ChainRules           rules;

  std::vector<PublicKey> validator_keys() const;

  /// Signs block_hash with the first `signers` validators (default: quorum).
  void seal(Block &block, std::optional<std::size_t> signers = std::nullopt) const;

  Transaction record_tx(PatientRecord const &record, std::uint64_t ts,
                        OpKind op = OpKind::CreateRecord) const;

  /// Child of `parent` holding `txs`, sealed by a quorum.
  Block next_block(Block const &parent, std::vector<Transaction> txs, std::uint64_t ts) const;

  /// Genesis plus `blocks` sealed blocks of `txs_per_block` record creates.
  ChainState build_chain(std::size_t blocks, std::size_t txs_per_block = 1) const;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  TempDir();
  ~TempDir();
  TempDir(TempDir const &)            = delete;
  TempDir &operator=(TempDir const &) = delete;

  std::filesystem::path const &path() const
  {
    return path_;
  }

private:
  std::filesystem::path path_;
};

}  // namespace ledgerehr::testing
