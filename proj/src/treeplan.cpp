#include "designforge/treeplan.hpp"

#include "designforge/convert.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>

namespace dforge {

int CrosstwirlTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, static_cast<int>(n.path.size()));
  return d;
}

std::vector<std::vector<int>> CrosstwirlTree::layers() const {
  std::vector<std::vector<int>> out(nodes.empty() ? 0 : depth() + 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i].path.size()].push_back(static_cast<int>(i));
  return out;
}

std::vector<int> CrosstwirlTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].leaf()) out.push_back(static_cast<int>(i));
  return out;
}

void validate_tree(const CrosstwirlTree& t) {
  if (t.nodes.empty()) throw ConsistencyError("empty tree");
  for (const auto& n : t.nodes) {
    if (!std::is_sorted(n.qudits.begin(), n.qudits.end())) throw ConsistencyError("node qudits not sorted");
    if (n.leaf()) {
      if (!n.cross_sets.empty()) throw ConsistencyError("leaf carries crosstwirl sets");
      continue;
    }
    if (n.cross_sets.size() != n.children.size()) throw ConsistencyError("one crosstwirl set per child required");
    std::vector<int> uni;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const TreeNode& c = t.nodes.at(n.children[i]);
      if (c.path.size() != n.path.size() + 1 || !std::equal(n.path.begin(), n.path.end(), c.path.begin()))
        throw ConsistencyError("child path does not extend parent path");
      std::vector<int> s = n.cross_sets[i];
      std::sort(s.begin(), s.end());
      if (!std::includes(c.qudits.begin(), c.qudits.end(), s.begin(), s.end()))
        throw ConsistencyError("crosstwirl set leaves its child subsystem");
      uni.insert(uni.end(), c.qudits.begin(), c.qudits.end());
    }
    std::sort(uni.begin(), uni.end());
    if (std::adjacent_find(uni.begin(), uni.end()) != uni.end()) throw ConsistencyError("children overlap");
    if (uni != n.qudits) throw ConsistencyError("children do not partition the parent");
  }
}

long Lattice::size() const {
  long s = 1;
  for (int i = 0; i < D; ++i) s *= side;
  return s;
}

std::vector<long> Lattice::coords(long i) const {
  std::vector<long> c(D);
  for (int j = D - 1; j >= 0; --j) {
    c[j] = i % side;
    i /= side;
  }
  return c;
}

long Lattice::id(const std::vector<long>& c) const {
  long r = 0;
  for (int j = 0; j < D; ++j) r = r * side + c[j];
  return r;
}

Lattice lattice_for(long M_total, int D) {
  if (D < 1) throw DomainError("D must be positive");
  if (M_total < 1 || (M_total & (M_total - 1)) != 0) throw DomainError("M_total must be a power of 2^D");
  int bits = 0;
  while ((1L << bits) < M_total) ++bits;
  if (bits % D != 0) throw DomainError("M_total must be a power of 2^D");
  return Lattice{D, 1L << (bits / D)};
}

int leaf_exponent(int D, int ell) {
  if (ell < 1) throw DomainError("ell must be positive");
  double v = std::log2(8.0 * ell) / D;
  return static_cast<int>(std::ceil(v - 1e-12));
}

namespace {

struct Builder {
  Lattice lat;
  long leaf_side;
  int ell;
  CrosstwirlTree tree;

  std::vector<int> cube(const std::vector<long>& lo, long len) const {
    std::vector<int> ids;
    long n = 1;
    for (int j = 0; j < lat.D; ++j) n *= len;
    ids.reserve(n);
    std::vector<long> c(lat.D);
    for (long t = 0; t < n; ++t) {
      long r = t;
      for (int j = lat.D - 1; j >= 0; --j) {
        c[j] = lo[j] + r % len;
        r /= len;
      }
      ids.push_back(static_cast<int>(lat.id(c)));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // ell cells of the child cube nearest the parent centre, by (Linf, L1, id)
  std::vector<int> corner_set(const std::vector<long>& clo, long clen, const std::vector<long>& centre) const {
    long R = 0;
    auto vol = [&](long r) {
      double v = 1.0;
      for (int j = 0; j < lat.D; ++j) v *= static_cast<double>(r + 1);
      return v;
    };
    while (vol(R) < ell && R + 1 < clen) ++R;
    std::vector<std::tuple<long, long, long>> cand;
    long span = R + 1, n = 1;
    for (int j = 0; j < lat.D; ++j) n *= span;
    std::vector<long> c(lat.D);
    for (long t = 0; t < n; ++t) {
      long r = t, linf = 0, l1 = 0;
      for (int j = lat.D - 1; j >= 0; --j) {
        long dd = r % span;
        r /= span;
        bool lower = clo[j] < centre[j];
        c[j] = lower ? centre[j] - 1 - dd : centre[j] + dd;
        linf = std::max(linf, dd);
        l1 += dd;
      }
      cand.emplace_back(linf, l1, lat.id(c));
    }
    std::sort(cand.begin(), cand.end());
    if (static_cast<long>(cand.size()) < ell) throw ConsistencyError("child too small for its crosstwirl set");
    std::vector<int> out;
    for (int i = 0; i < ell; ++i) out.push_back(static_cast<int>(std::get<2>(cand[i])));
    return out;
  }

  int build(const std::vector<long>& lo, long len, std::vector<int> path) {
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{path, cube(lo, len), {}, {}});
    if (len <= leaf_side) return idx;
    long half = len / 2;
    std::vector<long> centre(lat.D);
    for (int j = 0; j < lat.D; ++j) centre[j] = lo[j] + half;
    int nchild = 1 << lat.D;
    std::vector<int> kids;
    std::vector<std::vector<int>> sets;
    for (int i = 0; i < nchild; ++i) {
      std::vector<long> clo(lat.D);
      for (int j = 0; j < lat.D; ++j) clo[j] = lo[j] + (((i >> (lat.D - 1 - j)) & 1) ? half : 0);
      std::vector<int> cp = path;
      cp.push_back(i);
      sets.push_back(corner_set(clo, half, centre));
      kids.push_back(build(clo, half, cp));
    }
    tree.nodes[idx].children = kids;
    tree.nodes[idx].cross_sets = sets;
    return idx;
  }
};

}  // namespace

CrosstwirlTree build_dlct(long M_total, int D, int ell, int q) {
  if (q < 2) throw DomainError("q must be at least 2");
  Lattice lat = lattice_for(M_total, D);
  if (ell < 1) throw DomainError("ell must be positive");
  double thresh = std::ldexp(static_cast<double>(ell), D + 3);
  Builder b{lat, lat.side, ell, {}};
  if (static_cast<double>(M_total) >= thresh) b.leaf_side = 1L << leaf_exponent(D, ell);
  b.build(std::vector<long>(D, 0), lat.side, {});
  return b.tree;
}

ParallelCertificate is_parallelizable(const CrosstwirlTree& t) {
  ParallelCertificate cert;
  std::map<int, std::pair<int, int>> owner;
  for (std::size_t n = 0; n < t.nodes.size(); ++n)
    for (std::size_t i = 0; i < t.nodes[n].cross_sets.size(); ++i)
      for (int qd : t.nodes[n].cross_sets[i]) {
        auto [it, fresh] = owner.emplace(qd, std::make_pair(static_cast<int>(n), static_cast<int>(i)));
        if (!fresh) {
          cert.ok = false;
          cert.qudit = qd;
          cert.first = it->second;
          cert.second = {static_cast<int>(n), static_cast<int>(i)};
          return cert;
        }
      }
  return cert;
}

std::vector<int> leaf_crosstwirl_counts(const CrosstwirlTree& t) {
  std::vector<int> leaves = t.leaves();
  std::vector<int> out(leaves.size(), 0);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const auto& lq = t.nodes[leaves[l]].qudits;
    for (const auto& n : t.nodes) {
      bool touch = false;
      for (const auto& s : n.cross_sets)
        for (int qd : s)
          if (std::binary_search(lq.begin(), lq.end(), qd)) touch = true;
      out[l] += touch ? 1 : 0;
    }
  }
  return out;
}

double placeholder_depth(long r, int /*q*/, int K, double delta) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  return static_cast<double>(r) * K * std::ceil(std::log2(1.0 / delta));
}

double depth_budget(const CrosstwirlTree& t, const std::function<double(long)>& depth_of_size, bool parallel) {
  auto node_depth = [&](const TreeNode& n) {
    if (n.leaf()) return depth_of_size(static_cast<long>(n.qudits.size()));
    long c = 0;
    for (const auto& s : n.cross_sets) c += static_cast<long>(s.size());
    return depth_of_size(c);
  };
  if (parallel) {
    double leaf = 0.0, inner = 0.0;
    for (const auto& n : t.nodes) (n.leaf() ? leaf : inner) = std::max(n.leaf() ? leaf : inner, node_depth(n));
    return leaf + inner;
  }
  double total = 0.0;
  for (const auto& layer : t.layers()) {
    double mx = 0.0;
    for (int i : layer) mx = std::max(mx, node_depth(t.nodes[i]));
    total += mx;
  }
  return total;
}

LatticePlan plan_lattice(long M_total, int D, int K, int q, double eps, const DepthFn& depth) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (K < 1) throw DomainError("K must be positive");
  if (q < 2) throw DomainError("q must be at least 2");
  Lattice lat = lattice_for(M_total, D);
  LatticePlan p;
  p.D = D;
  p.M_total = M_total;
  p.q = q;
  p.K = K;
  p.eps = eps;
  const double lq = std::log(static_cast<double>(q));
  double log_arg = std::log(150.0) + std::log(static_cast<double>(M_total)) + std::ldexp(log_factorial(K), D) +
                   std::log(static_cast<double>(K)) + 0.5 * D * std::log(2.0) - std::log(eps);
  p.ell_real = log_arg / lq;
  p.ell = static_cast<int>(std::ceil(p.ell_real - 1e-12));
  p.warnings.push_back("theorem statement bounds ell without the logarithm; the logarithmic form is used");
  p.warnings.push_back("ell formula carries K!^(2^D) while the crosstwirl error for 2^D parties carries K!^(2^(D+1))");
  p.delta_statement = eps / (5.0 * static_cast<double>(M_total));

  double thresh = std::ldexp(static_cast<double>(p.ell), D + 3);
  p.tree = build_dlct(M_total, D, p.ell, q);
  p.single_node = p.tree.nodes.size() == 1;
  if (p.single_node) {
    p.warnings.push_back("ell exceeds M/2^(D+3): single approximate design twirl on the whole lattice");
    p.s = lat.side > 0 ? static_cast<int>(std::lround(std::log2(static_cast<double>(lat.side)))) : 0;
    p.leaf_side = lat.side;
    p.P = 1;
    p.delta = eps;
    p.crosstwirl_eps = 0.0;
    p.composed_error_formula = compose_errors({}, p.delta);
    p.composed_error_tree = p.composed_error_formula;
    p.depth_budget = depth(M_total, q, K, p.delta);
  } else {
    p.s = leaf_exponent(D, p.ell);
    p.leaf_side = 1L << p.s;
    p.P = static_cast<long>(p.tree.leaves().size());
    p.delta = eps / (10.0 * static_cast<double>(p.P));
    p.depth_budget = 2.0 * depth(static_cast<long>(thresh), q, K, p.delta);

    ProtocolParams ct;
    ct.q = q;
    ct.k = K;
    ct.kind = ProtocolKind::multi_crosstwirl;
    // the lowest crosstwirls act on leaves, the smallest children
    int leaf_qudits = static_cast<int>(p.tree.nodes[p.tree.leaves().front()].qudits.size());
    for (int i = 0; i < (1 << D); ++i) ct.parties.push_back({leaf_qudits, p.ell});
    CrosstwirlEpsReport ce = crosstwirl_design_eps(ct);
    p.crosstwirl_eps = ce.epsilon;
    p.checks.push_back({"crosstwirl theorem preconditions", ce.preconditions_met()});

    double P = static_cast<double>(p.P);
    double lf = (2.0 * P - 1.0) * std::log1p(p.delta) + (P - 1.0) * std::log1p(eps / (6.0 * P));
    p.composed_error_formula = std::expm1(lf);
    std::vector<double> parts;
    for (const auto& n : p.tree.nodes) {
      parts.push_back(p.delta);
      if (!n.leaf()) parts.push_back(p.crosstwirl_eps);
    }
    p.composed_error_tree = compose_errors(parts, 0.0);
  }
  p.certificate = is_parallelizable(p.tree);
  p.parallelizable = p.certificate.ok;
  validate_tree(p.tree);
  auto leaves = p.tree.leaves();
  bool sizes = true;
  for (int l : leaves) {
    double sz = static_cast<double>(p.tree.nodes[l].qudits.size());
    sizes = sizes && sz >= 2.0 * p.ell && sz <= thresh;
  }
  auto counts = leaf_crosstwirl_counts(p.tree);
  p.checks.push_back({"parallelizable", p.parallelizable});
  p.checks.push_back({"leaf sizes in [2l, 2^(D+3) l]", sizes});
  p.checks.push_back({"composed error (formula) <= eps", p.composed_error_formula <= eps * (1 + 1e-12)});
  p.checks.push_back({"composed error (tree walk) <= eps", p.composed_error_tree <= eps * (1 + 1e-12)});
  p.checks.push_back({"each leaf in at most 2 crosstwirls",
                      std::all_of(counts.begin(), counts.end(), [](int c) { return c <= 2; })});
  const DepthFn& dfn = depth;
  double dlt = p.delta;
  p.tree_depth_budget =
      depth_budget(p.tree, [&](long r) { return dfn(r, q, K, dlt); }, p.parallelizable);
  return p;
}

Region make_region(const Lattice& lat, std::vector<int> qudits) {
  std::sort(qudits.begin(), qudits.end());
  qudits.erase(std::unique(qudits.begin(), qudits.end()), qudits.end());
  if (qudits.empty()) throw DomainError("region is empty");
  if (qudits.front() < 0 || qudits.back() >= lat.size()) throw DomainError("region qudit out of range");
  Region r;
  r.qudits = qudits;
  auto in = [&](long id) { return std::binary_search(qudits.begin(), qudits.end(), static_cast<int>(id)); };
  auto neighbours = [&](long id) {
    std::vector<long> out;
    auto c = lat.coords(id);
    for (int j = 0; j < lat.D; ++j)
      for (int dlt : {-1, 1}) {
        long v = c[j] + dlt;
        if (v < 0 || v >= lat.side) continue;
        auto cc = c;
        cc[j] = v;
        out.push_back(lat.id(cc));
      }
    return out;
  };
  for (int qd : qudits) {
    for (long nb : neighbours(qd))
      if (!in(nb)) {
        ++r.boundary;
        break;
      }
  }
  std::vector<char> seen(qudits.size(), 0);
  std::deque<long> bfs{qudits.front()};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!bfs.empty()) {
    long cur = bfs.front();
    bfs.pop_front();
    for (long nb : neighbours(cur)) {
      auto it = std::lower_bound(qudits.begin(), qudits.end(), static_cast<int>(nb));
      if (it == qudits.end() || *it != nb) continue;
      std::size_t pos = static_cast<std::size_t>(it - qudits.begin());
      if (seen[pos]) continue;
      seen[pos] = 1;
      ++reached;
      bfs.push_back(nb);
    }
  }
  r.contiguous = reached == qudits.size();
  return r;
}

double comm_budget(const LatticePlan& plan, const Region& region) {
  if (!region.contiguous) throw DomainError("region is not contiguous");
  if (region.boundary == 0) return 0.0;
  const int D = plan.D;
  double unit = std::ldexp(static_cast<double>(plan.ell), D + 1);
  double den = std::pow(unit, static_cast<double>(D - 1) / D);
  double blocks = std::ceil(region.boundary / den - 1e-9);
  return blocks * (std::ldexp(1.0, D + 1) + 1.0) * plan.ell * std::log2(static_cast<double>(plan.q));
}

double comm_budget_tree(const CrosstwirlTree& t, const Region& region, int q) {
  const auto& S = region.qudits;
  auto in = [&](int id) { return std::binary_search(S.begin(), S.end(), id); };
  const double lq = std::log2(static_cast<double>(q));
  double total = 0.0;
  for (const auto& n : t.nodes) {
    if (n.leaf()) {
      long a = 0;
      for (int qd : n.qudits) a += in(qd) ? 1 : 0;
      long b = static_cast<long>(n.qudits.size()) - a;
      if (a > 0 && b > 0) total += static_cast<double>(n.qudits.size()) * lq;
      continue;
    }
    long a = 0, b = 0;
    for (const auto& s : n.cross_sets)
      for (int qd : s) (in(qd) ? a : b) += 1;
    if (a > 0 && b > 0) total += 2.0 * static_cast<double>(std::min(a, b)) * lq;
  }
  return total;
}

}  // namespace dforge
