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

#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace ledgerehr::testing {

namespace {

PatientRecord row(std::array<char const *, kRecordFieldCount> const &v)
{
  PatientRecord r;
  auto          fields = record_fields(r);
  for (std::size_t i = 0; i < kRecordFieldCount; ++i)
  {
    *fields[i] = v[i];
  }
  return r;
}

}  // namespace

std::array<PatientRecord, 10> const &table_rows()
{
  static std::array<PatientRecord, 10> const rows{
      row({"1", "Abdur Rahim", "1971-01-03", "Male", "456", "A+", "N/A", "2021-01-07", "Dr. Ali",
           "99", "5", "69", "0014373676"}),
      row({"2", "Sharon Glasgow", "1969-09-22", "Female", "6001", "B+", "N/A", "2021-02-20",
           "Dr. Robert", "101", "8", "83", "0092340493"}),
      row({"3", "Harry Dorell", "1991-11-11", "Male", "110111", "B", "N/A", "2020-11-11", "AAA",
           "98", "6", "76", "123233241"}),
      row({"4", "Evika Salomon", "1988-09-22", "Female", "880", "B+", "Paracetamol", "2020-10-20",
           "Dr. Mar", "100", "5", "66", "009487090"}),
      row({"5", "Ilya Ilya", "1996-12-00", "Female", "883034", "110", "paracetamol", "2021-11-04",
           "dr. elight", "99", "160", "56", "965470266"}),
      row({"6", "rajsh veer", "1986-02-02", "Male", "36065", "110", "corvid-19", "2021-03-16",
           "dr. harany", "97", "185", "86", "965470266"}),
      row({"7", "Mohammad Hasan", "1985-03-13", "Male", "3406", "B", "N/A", "2021-03-11",
           "Dr. Ahmad", "98", "4", "66", "923492793"}),
      row({"8", "Abdur Shah", "1971-01-03", "Male", "4907", "A+", "N/A", "2021-01-09", "Dr. Ali",
           "99", "8", "69", "0014716679"}),
      row({"9", "rocky jayp", "1976-08-12", "Male", "3340", "125", "corvid", "2021-02-04",
           "dr. paul", "99", "185", "86", "965470266"}),
      row({"10", "kamlesh aya", "1996-04-02", "Male", "123", "120", "606-030", "2021-03-10",
           "Dr. Rehan", "97", "185", "86", "965470266"}),
  };
  return rows;
}

std::string random_string(std::mt19937_64 &rng, std::size_t max_len)
{
  static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-.";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
  std::string                                s(len(rng), ' ');
  for (auto &c : s)
  {
    c = alphabet[pick(rng)];
  }
  return s;
}

Bytes random_bytes(std::mt19937_64 &rng, std::size_t max_len)
{
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  Bytes                                      b(len(rng));
  for (auto &x : b)
  {
    x = static_cast<std::uint8_t>(rng());
  }
  return b;
}

PatientRecord random_record(std::mt19937_64 &rng, std::string patient_id)
{
  PatientRecord r;
  for (auto *f : record_fields(r))
  {
    *f = random_string(rng, 12);
  }
  r.patient_id    = std::move(patient_id);
  r.name          = "n" + random_string(rng, 16);
  r.date_of_birth = "1980-0" + std::to_string(1 + rng() % 9) + "-1" + std::to_string(rng() % 10);
  r.visit_date.clear();
  return r;
}

Consortium::Consortium(std::size_t n_validators, std::string const &network)
  : client(keygen_from_label("fixture-client"))
  , genesis(make_genesis(network, 0))
{
  for (std::size_t i = 0; i < n_validators; ++i)
  {
    validators.push_back(keygen_from_label("fixture-validator-" + std::to_string(i)));
  }
  rules              = ChainRules::consortium(validator_keys(), block_hash(genesis.header));
  rules.verify_cache = std::make_shared<VerifyCache>();
}

std::vector<PublicKey> Consortium::validator_keys() const
{
  std::vector<PublicKey> keys;
  for (auto const &v : validators)
  {
    keys.push_back(v.public_key);
  }
  return keys;
}

void Consortium::seal(Block &block, std::optional<std::size_t> signers) const
{
  auto hash = block_hash(block.header);
  block.commit_signatures.clear();
  for (std::size_t i = 0; i < signers.value_or(rules.quorum); ++i)
  {
    block.commit_signatures.push_back(
        {validators[i].id(), sign_payload(validators[i].private_key, hash.view())});
  }
}

Transaction Consortium::record_tx(PatientRecord const &record, std::uint64_t ts, OpKind op) const
{
  return seal_transaction(op, canonical_encode_record(record), client.id(), ts,
                          client.private_key);
}

Block Consortium::next_block(Block const &parent, std::vector<Transaction> txs,
                             std::uint64_t ts) const
{
  auto block = assemble_block(parent, std::move(txs), ts, validators.front().id(),
                              [](Transaction const &) { return std::nullopt; });
  seal(block);
  return block;
}

ChainState Consortium::build_chain(std::size_t blocks, std::size_t txs_per_block) const
{
  ChainState chain(genesis);
  std::mt19937_64 rng(blocks * 31 + txs_per_block);
  for (std::size_t h = 1; h <= blocks; ++h)
  {
    std::vector<Transaction> txs;
    for (std::size_t i = 0; i < txs_per_block; ++i)
    {
      auto id = std::to_string(h) + "-" + std::to_string(i);
      txs.push_back(record_tx(random_record(rng, id), h * 1000 + i));
    }
    chain.push_unchecked(next_block(chain.tip(), std::move(txs), h * 1000));
  }
  return chain;
}

TempDir::TempDir()
{
  static std::atomic<unsigned> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ledgerehr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace ledgerehr::testing
