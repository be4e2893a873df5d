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

#include "ledgerehr/merkle.hpp"

#include <string>

namespace ledgerehr::merkle {

Hash32 leaf_hash(ByteView leaf)
{
  return Sha256{}.update(kLeafPrefix).update(leaf).finish();
}

Hash32 node_hash(Hash32 const &left, Hash32 const &right)
{
  return Sha256{}.update(kInternalPrefix).update(left.view()).update(right.view()).finish();
}

MerkleTree::MerkleTree(std::vector<Bytes> const &leaves)
{
  if (leaves.empty())
  {
    throw MerkleError(MerkleError::Kind::EmptyLeaves, "merkle tree needs at least one leaf");
  }
  std::vector<Hash32> hashes;
  hashes.reserve(leaves.size());
  for (auto const &leaf : leaves)
  {
    hashes.push_back(leaf_hash(leaf));
  }
  levels_.push_back(std::move(hashes));
  build();
}

MerkleTree::MerkleTree(std::vector<Hash32> leaf_hashes)
{
  if (leaf_hashes.empty())
  {
    throw MerkleError(MerkleError::Kind::EmptyLeaves, "merkle tree needs at least one leaf");
  }
  levels_.push_back(std::move(leaf_hashes));
  build();
}

void MerkleTree::build()
{
  while (levels_.back().size() > 1)
  {
    auto const         &below = levels_.back();
    std::vector<Hash32> above;
    above.reserve((below.size() + 1) / 2);
    std::size_t i = 0;
    for (; i + 1 < below.size(); i += 2)
    {
      above.push_back(node_hash(below[i], below[i + 1]));
    }
    if (i < below.size())
    {
      above.push_back(below[i]);  // odd node carried up
    }
    levels_.push_back(std::move(above));
  }
}

MerkleProof MerkleTree::prove(std::size_t index) const
{
  if (index >= leaf_count())
  {
    throw MerkleError(MerkleError::Kind::IndexOutOfRange,
                      "leaf index " + std::to_string(index) + " out of range for " +
                          std::to_string(leaf_count()) + " leaves");
  }
  MerkleProof proof;
  proof.leaf_index = index;
  std::size_t pos  = index;
  for (std::size_t level = 0; level + 1 < levels_.size(); ++level)
  {
    auto const &nodes = levels_[level];
    if (pos % 2 == 1)
    {
      proof.siblings.push_back({nodes[pos - 1], Side::Left});
    }
    else if (pos + 1 < nodes.size())
    {
      proof.siblings.push_back({nodes[pos + 1], Side::Right});
    }
    pos /= 2;
  }
  return proof;
}

Hash32 build_root(std::vector<Bytes> const &leaves)
{
  return MerkleTree(leaves).root();
}

MerkleProof prove(std::vector<Bytes> const &leaves, std::size_t index)
{
  return MerkleTree(leaves).prove(index);
}

bool verify_proof(Hash32 const &root, ByteView leaf, MerkleProof const &proof)
{
  Hash32 acc = leaf_hash(leaf);
  for (auto const &step : proof.siblings)
  {
    acc = step.side == Side::Left ? node_hash(step.sibling, acc) : node_hash(acc, step.sibling);
  }
  return acc == root;
}

}  // namespace ledgerehr::merkle
