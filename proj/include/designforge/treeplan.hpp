#pragma once

#include "designforge/angle.hpp"
#include "designforge/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dforge {

struct TreeNode {
  std::vector<int> path;                     // child indices from the root
  std::vector<int> qudits;                   // sorted ids
  std::vector<int> children;                 // node indices
  std::vector<std::vector<int>> cross_sets;  // one per child, subset of that child
  bool leaf() const { return children.empty(); }
};

struct CrosstwirlTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int depth() const;
  std::vector<std::vector<int>> layers() const;
  std::vector<int> leaves() const;
};

// Partition and subset invariants. Throws ConsistencyError.
void validate_tree(const CrosstwirlTree& t);

// Hypercube of side 2^x in D dimensions, row-major ids.
struct Lattice {
  int D = 1;
  long side = 1;
  long size() const;
  std::vector<long> coords(long id) const;
  long id(const std::vector<long>& c) const;
};

Lattice lattice_for(long M_total, int D);

// Leaf side exponent ceil(log2(8 ell) / D).
int leaf_exponent(int D, int ell);

CrosstwirlTree build_dlct(long M_total, int D, int ell, int q);

struct ParallelCertificate {
  bool ok = true;
  int qudit = -1;
  std::pair<int, int> first{-1, -1};   // (node, child)
  std::pair<int, int> second{-1, -1};
};

ParallelCertificate is_parallelizable(const CrosstwirlTree& t);

// Number of crosstwirls (non-leaf nodes) whose sets touch each leaf.
std::vector<int> leaf_crosstwirl_counts(const CrosstwirlTree& t);

// Depth of a constituent design on r qudits.
using DepthFn = std::function<double(long r, int q, int K, double delta)>;
// r K ceil(log2(1/delta)): stand-in for an unspecified small-system design.
double placeholder_depth(long r, int q, int K, double delta);

// Per-node depth by subsystem size; parallel two-term form or layer sum.
double depth_budget(const CrosstwirlTree& t, const std::function<double(long)>& depth_of_size, bool parallel);

struct LatticePlan {
  int D = 1;
  long M_total = 1;
  int q = 2;
  int K = 1;
  double eps = 0.5;
  double ell_real = 0.0;  // the log_q expression before rounding
  int ell = 0;
  int s = 0;
  long leaf_side = 1;
  long P = 1;
  double delta = 0.0;
  double delta_statement = 0.0;  // eps / (5M)
  bool single_node = false;
  CrosstwirlTree tree;
  ParallelCertificate certificate;
  bool parallelizable = true;
  double depth_budget = 0.0;       // 2 d(2^(D+3) ell, q, K, delta)
  double tree_depth_budget = 0.0;  // same depth function walked over the tree
  double crosstwirl_eps = 0.0;     // per non-leaf node, theorem constant
  double composed_error_formula = 0.0;
  double composed_error_tree = 0.0;
  std::vector<NamedCheck> checks;
  std::vector<std::string> warnings;
};

LatticePlan plan_lattice(long M_total, int D, int K, int q, double eps, const DepthFn& depth = placeholder_depth);

struct Region {
  std::vector<int> qudits;
  int boundary = 0;  // qudits with a lattice neighbour outside
  bool contiguous = false;
};

Region make_region(const Lattice& lat, std::vector<int> qudits);

// Closed-form lattice budget in qubits. Throws DomainError if not contiguous.
double comm_budget(const LatticePlan& plan, const Region& region);

// Tree accounting: boundary leaves in full plus 2 min(|X in S|, |X out of S|)
// per crossing crosstwirl X, in qubits.
double comm_budget_tree(const CrosstwirlTree& t, const Region& region, int q);

}  // namespace dforge
