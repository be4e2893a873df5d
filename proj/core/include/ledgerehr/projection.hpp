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

#include "ledgerehr/ledger.hpp"
#include "ledgerehr/record.hpp"

#include <map>
#include <string>
#include <vector>

namespace ledgerehr {

struct RecordState
{
  PatientRecord       latest;
  std::vector<Hash32> provenance;  // chain order
  std::uint64_t       created_height{0};
  std::size_t         created_index{0};
};

struct Anomaly
{
  std::uint64_t height{0};
  std::size_t   index{0};
  Hash32        tx_hash;
  std::string   reason;
};

/// Current patient state derived by folding committed transactions in block
/// order, then intra-block order. Updates replace the record wholesale and
/// extend the provenance list; nothing is ever rewritten.
class StateView
{
public:
  /// Folds one committed block. Anomalies (duplicate create, update of an
  /// unknown patient, undecodable payload) are collected, never thrown.
  void apply(Block const &block);

  RecordState const *find(std::string const &patient_id) const;

  /// Records in creation order.
  std::vector<RecordState const *> records() const;

  std::size_t size() const
  {
    return records_.size();
  }
  std::vector<Anomaly> const &anomalies() const
  {
    return anomalies_;
  }

  /// Canonical serialisation, for determinism checks.
  Bytes encode() const;

private:
  std::map<std::string, RecordState> records_;
  std::vector<std::string>           creation_order_;
  std::vector<Anomaly>               anomalies_;
};

StateView project_state(ChainState const &chain);

}  // namespace ledgerehr
