#include "designforge/symgroup.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace dforge {

Perm make_perm(std::vector<int> image) {
  int k = static_cast<int>(image.size());
  if (k < 1) throw DomainError("permutation of degree 0");
  std::vector<char> seen(k, 0);
  for (int v : image) {
    if (v < 0 || v >= k || seen[v]) throw DomainError("image is not a bijection");
    seen[v] = 1;
  }
  Perm p;
  p.image = std::move(image);
  p.cycles = cycle_count(p);
  return p;
}

Perm identity_perm(int k) {
  std::vector<int> im(k);
  std::iota(im.begin(), im.end(), 0);
  return make_perm(std::move(im));
}

Perm compose(const Perm& a, const Perm& b) {
  if (a.degree() != b.degree()) throw DomainError("degree mismatch");
  std::vector<int> im(a.degree());
  for (int i = 0; i < a.degree(); ++i) im[i] = a.image[b.image[i]];
  return make_perm(std::move(im));
}

Perm inverse(const Perm& p) {
  std::vector<int> im(p.degree());
  for (int i = 0; i < p.degree(); ++i) im[p.image[i]] = i;
  return make_perm(std::move(im));
}

int cycle_count(const Perm& p) {
  int k = p.degree(), c = 0;
  std::vector<char> seen(k, 0);
  for (int i = 0; i < k; ++i) {
    if (seen[i]) continue;
    ++c;
    for (int j = i; !seen[j]; j = p.image[j]) seen[j] = 1;
  }
  return c;
}

std::size_t perm_rank(const Perm& p) {
  int k = p.degree();
  std::size_t r = 0;
  std::vector<char> used(k, 0);
  for (int i = 0; i < k; ++i) {
    int smaller = 0;
    for (int v = 0; v < p.image[i]; ++v)
      if (!used[v]) ++smaller;
    used[p.image[i]] = 1;
    r = r * static_cast<std::size_t>(k - i) + static_cast<std::size_t>(smaller);
  }
  return r;
}

Perm perm_unrank(int k, std::size_t r) {
  std::vector<int> digits(k);
  for (int i = k - 1; i >= 0; --i) {
    std::size_t base = static_cast<std::size_t>(k - i);
    digits[i] = static_cast<int>(r % base);
    r /= base;
  }
  if (r != 0) throw DomainError("rank out of range");
  std::vector<int> pool(k);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> im(k);
  for (int i = 0; i < k; ++i) {
    im[i] = pool[digits[i]];
    pool.erase(pool.begin() + digits[i]);
  }
  return make_perm(std::move(im));
}

std::vector<Perm> enumerate_group(int k) {
  if (k < 1 || k > kMaxDegree) throw CapacityError("degree must be in 1..8");
  std::vector<int> im(k);
  std::iota(im.begin(), im.end(), 0);
  std::vector<Perm> out;
  do {
    out.push_back(make_perm(im));
  } while (std::next_permutation(im.begin(), im.end()));
  return out;
}

SymGroup::SymGroup(int k) : k_(k), elems_(enumerate_group(k)) {
  std::size_t n = elems_.size();
  inv_.resize(n);
  for (std::size_t r = 0; r < n; ++r) inv_[r] = perm_rank(inverse(elems_[r]));
  if (k <= 6) {
    mul_.resize(n * n);
    qcyc_.resize(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        Perm ab = compose(elems_[a], elems_[b]);
        mul_[a * n + b] = static_cast<std::uint32_t>(perm_rank(ab));
      }
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        qcyc_[a * n + b] = static_cast<std::uint8_t>(elems_[mul_[inv_[a] * n + b]].cycles);
  }
}

std::size_t SymGroup::mul(std::size_t a, std::size_t b) const {
  if (!mul_.empty()) return mul_[a * order() + b];
  return perm_rank(compose(elems_[a], elems_[b]));
}

int SymGroup::quotient_cycles(std::size_t a, std::size_t b) const {
  if (!qcyc_.empty()) return qcyc_[a * order() + b];
  return compose(elems_[inv_[a]], elems_[b]).cycles;
}

const SymGroup& sym_group(int k) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<SymGroup>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[k];
  if (!slot) slot = std::make_unique<SymGroup>(k);
  return *slot;
}

namespace {
void partitions_rec(int remaining, int max_part, int slots, std::vector<int>& cur,
                    std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(cur);
    return;
  }
  if (slots == 0) return;
  for (int p = std::min(remaining, max_part); p >= 1; --p) {
    cur.push_back(p);
    partitions_rec(remaining - p, p, slots - 1, cur, out);
    cur.pop_back();
  }
}
}  // namespace

std::vector<Partition> partitions(int k, int d) {
  if (k < 1 || d < 1) throw DomainError("partitions need k >= 1 and d >= 1");
  std::vector<std::vector<int>> raw;
  std::vector<int> cur;
  partitions_rec(k, k, d, cur, raw);
  std::vector<Partition> out;
  out.reserve(raw.size());
  for (auto& r : raw) out.push_back(Partition{std::move(r), k, d});
  return out;
}

std::vector<std::vector<int>> hook_lengths(const Partition& lam) {
  const auto& p = lam.parts;
  std::vector<std::vector<int>> h(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    h[i].resize(p[i]);
    for (int j = 0; j < p[i]; ++j) {
      int arm = p[i] - j - 1;
      int leg = 0;
      for (std::size_t r = i + 1; r < p.size() && p[r] > j; ++r) ++leg;
      h[i][j] = arm + leg + 1;
    }
  }
  return h;
}

BigInt sym_irrep_dim(const Partition& lam) {
  BigInt denom = 1;
  for (const auto& row : hook_lengths(lam))
    for (int h : row) denom *= h;
  BigInt num = factorial(lam.k);
  if (num % denom != 0) throw ConsistencyError("hook-length quotient is not an integer");
  return num / denom;
}

BigInt unitary_irrep_dim(const Partition& lam, const BigInt& d) {
  if (d < 1) throw DomainError("dimension must be positive");
  if (BigInt(lam.length()) > d) throw DomainError("partition has more parts than the dimension");
  // content form: prod over cells (d + j - i) / prod hooks
  BigInt num = 1, den = 1;
  const auto h = hook_lengths(lam);
  for (std::size_t i = 0; i < lam.parts.size(); ++i)
    for (int j = 0; j < lam.parts[i]; ++j) {
      num *= d + j - static_cast<long>(i);
      den *= h[i][j];
    }
  if (num % den != 0) throw ConsistencyError("Weyl dimension is not an integer");
  return num / den;
}

}  // namespace dforge
