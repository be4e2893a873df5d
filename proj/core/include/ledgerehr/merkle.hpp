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

#include "ledgerehr/bytes.hpp"
#include "ledgerehr/hash.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

/// Binary Merkle tree over byte-string leaves.
///
///   leaf     = SHA-256(0x00 || leaf bytes)
///   internal = SHA-256(0x01 || left || right)
///
/// A level with an odd number of nodes carries its last node up unchanged,
/// so no leaf is ever duplicated. A carried node contributes no sibling to
/// the proof at that level.
namespace ledgerehr::merkle {

constexpr std::uint8_t kLeafPrefix     = 0x00;
constexpr std::uint8_t kInternalPrefix = 0x01;

class MerkleError : public std::invalid_argument
{
public:
  enum class Kind
  {
    EmptyLeaves,
    IndexOutOfRange,
  };

  MerkleError(Kind kind, std::string const &what)
    : std::invalid_argument(what)
    , kind_(kind)
  {}

  Kind kind() const noexcept
  {
    return kind_;
  }

private:
  Kind kind_;
};

/// Which side of the running hash the sibling sits on.
enum class Side : std::uint8_t
{
  Left,
  Right,
};

struct ProofStep
{
  Hash32 sibling;
  Side   side;

  bool operator==(ProofStep const &) const = default;
};

struct MerkleProof
{
  std::size_t            leaf_index{0};
  std::vector<ProofStep> siblings;

  bool operator==(MerkleProof const &) const = default;
};

Hash32 leaf_hash(ByteView leaf);
Hash32 node_hash(Hash32 const &left, Hash32 const &right);

/// All levels of the tree, leaves first. Building it once and then asking for
/// many proofs is O(n) + O(log n) per proof.
class MerkleTree
{
public:
  /// Throws MerkleError(EmptyLeaves) for an empty list.
  explicit MerkleTree(std::vector<Bytes> const &leaves);
  explicit MerkleTree(std::vector<Hash32> leaf_hashes);

  Hash32 const &root() const
  {
    return levels_.back().front();
  }
  std::size_t leaf_count() const
  {
    return levels_.front().size();
  }

  /// Throws MerkleError(IndexOutOfRange).
  MerkleProof prove(std::size_t index) const;

private:
  void build();

  std::vector<std::vector<Hash32>> levels_;
};

Hash32      build_root(std::vector<Bytes> const &leaves);
MerkleProof prove(std::vector<Bytes> const &leaves, std::size_t index);

/// Never throws; any mismatch is simply false.
bool verify_proof(Hash32 const &root, ByteView leaf, MerkleProof const &proof);

}  // namespace ledgerehr::merkle
