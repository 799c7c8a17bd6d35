#pragma once

#include "designforge/common.hpp"

#include <cstdint>
#include <vector>

namespace dforge {

// One-line notation: image[i] = pi(i).
struct Perm {
  std::vector<int> image;
  int cycles = 0;
  int degree() const { return static_cast<int>(image.size()); }
  bool operator==(const Perm& o) const { return image == o.image; }
};

Perm make_perm(std::vector<int> image);
Perm identity_perm(int k);
// (a*b)(i) = a(b(i))
Perm compose(const Perm& a, const Perm& b);
Perm inverse(const Perm& p);
int cycle_count(const Perm& p);
std::size_t perm_rank(const Perm& p);
Perm perm_unrank(int k, std::size_t r);

inline constexpr int kMaxDegree = 8;

// All k! permutations, lexicographic in one-line notation.
std::vector<Perm> enumerate_group(int k);

// Cached multiplication data for S_k, indexed by rank.
class SymGroup {
 public:
  explicit SymGroup(int k);
  int k() const { return k_; }
  std::size_t order() const { return elems_.size(); }
  const Perm& elem(std::size_t r) const { return elems_[r]; }
  int cycles(std::size_t r) const { return elems_[r].cycles; }
  std::size_t inv(std::size_t r) const { return inv_[r]; }
  std::size_t mul(std::size_t a, std::size_t b) const;
  // c(a^-1 b)
  int quotient_cycles(std::size_t a, std::size_t b) const;

 private:
  int k_;
  std::vector<Perm> elems_;
  std::vector<std::size_t> inv_;
  std::vector<std::uint32_t> mul_;  // filled for k <= 6
  std::vector<std::uint8_t> qcyc_;  // filled for k <= 6
};

// Shared instance per degree; built on first use.
const SymGroup& sym_group(int k);

// Nonzero parts only, weakly decreasing.
struct Partition {
  std::vector<int> parts;
  int k = 0;
  int d = 0;
  std::size_t length() const { return parts.size(); }
  bool operator==(const Partition& o) const { return parts == o.parts && k == o.k; }
};

// Partitions of k with at most d nonzero parts, lexicographically decreasing.
std::vector<Partition> partitions(int k, int d);

// hook lengths h(i,j) row by row
std::vector<std::vector<int>> hook_lengths(const Partition& lam);
BigInt sym_irrep_dim(const Partition& lam);
BigInt unitary_irrep_dim(const Partition& lam, const BigInt& d);
inline BigInt unitary_irrep_dim(const Partition& lam, long d) {
  return unitary_irrep_dim(lam, BigInt(d));
}

}  // namespace dforge
