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

#include "ledgerehr/projection.hpp"

namespace ledgerehr {

void StateView::apply(Block const &block)
{
  for (std::size_t i = 0; i < block.transactions.size(); ++i)
  {
    auto const &tx = block.transactions[i];
    if (tx.op_kind == OpKind::RegisterIdentity)
    {
      continue;
    }
    auto note = [&](std::string reason) {
      anomalies_.push_back({block.header.height, i, tx.tx_hash, std::move(reason)});
    };
    PatientRecord record;
    try
    {
      record = decode_record(tx.payload);
    }
    catch (DecodeError const &e)
    {
      note(std::string("malformed-payload: ") + e.what());
      continue;
    }
    auto it = records_.find(record.patient_id);
    if (tx.op_kind == OpKind::CreateRecord)
    {
      if (it != records_.end())
      {
        note("duplicate-create: " + record.patient_id);
        continue;
      }
      auto id = record.patient_id;
      records_.emplace(id, RecordState{std::move(record), {tx.tx_hash}, block.header.height, i});
      creation_order_.push_back(std::move(id));
    }
    else
    {
      if (it == records_.end())
      {
        note("update-missing: " + record.patient_id);
        continue;
      }
      it->second.latest = std::move(record);
      it->second.provenance.push_back(tx.tx_hash);
    }
  }
}

RecordState const *StateView::find(std::string const &patient_id) const
{
  auto it = records_.find(patient_id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<RecordState const *> StateView::records() const
{
  std::vector<RecordState const *> out;
  out.reserve(creation_order_.size());
  for (auto const &id : creation_order_)
  {
    out.push_back(&records_.at(id));
  }
  return out;
}

Bytes StateView::encode() const
{
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(creation_order_.size()));
  for (auto const &id : creation_order_)
  {
    auto const &state = records_.at(id);
    for (auto const *field : record_fields(state.latest))
    {
      w.var(*field);
    }
    w.u32(static_cast<std::uint32_t>(state.provenance.size()));
    for (auto const &h : state.provenance)
    {
      w.fixed(h.bytes);
    }
  }
  w.u32(static_cast<std::uint32_t>(anomalies_.size()));
  for (auto const &a : anomalies_)
  {
    w.u64(a.height).u32(static_cast<std::uint32_t>(a.index)).fixed(a.tx_hash.bytes).var(a.reason);
  }
  return std::move(w).take();
}

StateView project_state(ChainState const &chain)
{
  StateView view;
  for (auto const &block : chain.blocks())
  {
    view.apply(*block);
  }
  return view;
}

}  // namespace ledgerehr
