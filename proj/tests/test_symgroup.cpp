#include "designforge/convert.hpp"
#include "designforge/symgroup.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

using namespace dforge;

namespace {

int cycles_by_walk(const std::vector<int>& img) {
  std::vector<bool> seen(img.size(), false);
  int c = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (seen[i]) continue;
    ++c;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(img[j])) seen[j] = true;
  }
  return c;
}

// Standard Young tableaux by removing corners.
long long count_syt(std::vector<int> shape) {
  while (!shape.empty() && shape.back() == 0) shape.pop_back();
  if (shape.empty()) return 1;
  long long total = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    bool corner = i + 1 == shape.size() || shape[i + 1] < shape[i];
    if (!corner) continue;
    auto s = shape;
    --s[i];
    total += count_syt(s);
  }
  return total;
}

// Semistandard tableaux with entries in [0, d), filled row by row.
long long count_ssyt(const std::vector<int>& shape, int d) {
  std::vector<std::vector<int>> t;
  for (int r : shape) t.emplace_back(r, -1);
  std::vector<std::pair<int, int>> cells;
  for (std::size_t i = 0; i < shape.size(); ++i)
    for (int j = 0; j < shape[i]; ++j) cells.emplace_back(static_cast<int>(i), j);
  long long count = 0;
  auto rec = [&](auto&& self, std::size_t n) -> void {
    if (n == cells.size()) {
      ++count;
      return;
    }
    auto [i, j] = cells[n];
    int lo = 0;
    if (j > 0) lo = std::max(lo, t[i][j - 1]);
    if (i > 0) lo = std::max(lo, t[i - 1][j] + 1);
    for (int v = lo; v < d; ++v) {
      t[i][j] = v;
      self(self, n + 1);
    }
    t[i][j] = -1;
  };
  rec(rec, 0);
  return count;
}

}  // namespace

TEST_CASE("enumeration is lexicographic and complete") {
  for (int k = 1; k <= 7; ++k) {
    auto g = enumerate_group(k);
    std::vector<int> img(k);
    std::iota(img.begin(), img.end(), 0);
    std::size_t i = 0;
    do {
      REQUIRE(i < g.size());
      CHECK(g[i].image == img);
      ++i;
    } while (std::next_permutation(img.begin(), img.end()));
    CHECK(i == g.size());
  }
  CHECK(enumerate_group(1).size() == 1);
  CHECK(enumerate_group(3).back().image == std::vector<int>{2, 1, 0});
  CHECK(enumerate_group(4).size() == 24);
}

TEST_CASE("cycle counts") {
  CHECK(cycle_count(identity_perm(5)) == 5);
  CHECK(cycle_count(make_perm({1, 0, 2, 3})) == 3);
  CHECK(cycle_count(make_perm({1, 2, 0})) == 1);
  for (int k = 1; k <= 6; ++k)
    for (const auto& p : enumerate_group(k)) CHECK(p.cycles == cycles_by_walk(p.image));
}

TEST_CASE("rank, unrank and group tables") {
  for (int k = 1; k <= 6; ++k) {
    auto g = enumerate_group(k);
    const SymGroup& G = sym_group(k);
    for (std::size_t r = 0; r < g.size(); ++r) {
      CHECK(perm_rank(g[r]) == r);
      CHECK(perm_unrank(k, r) == g[r]);
    }
    for (std::size_t a = 0; a < G.order(); a += 3)
      for (std::size_t b = 0; b < G.order(); b += 2) {
        Perm ab = compose(G.elem(a), G.elem(b));
        for (int i = 0; i < k; ++i) CHECK(ab.image[i] == G.elem(a).image[G.elem(b).image[i]]);
        CHECK(G.mul(a, b) == perm_rank(ab));
        CHECK(G.quotient_cycles(a, b) == cycles_by_walk(compose(inverse(G.elem(a)), G.elem(b)).image));
      }
    for (std::size_t a = 0; a < G.order(); ++a) CHECK(G.mul(a, G.inv(a)) == 0);
  }
  // degree 7 and 8 use the uncached path
  const SymGroup& G7 = sym_group(7);
  for (std::size_t a = 0; a < G7.order(); a += 397)
    CHECK(G7.mul(a, G7.inv(a)) == 0);
  CHECK(sym_group(8).order() == 40320);
}

TEST_CASE("degree above the cap is refused") {
  CHECK_THROWS_AS(enumerate_group(kMaxDegree + 1), CapacityError);
  CHECK_THROWS_AS(enumerate_group(0), std::exception);
}

TEST_CASE("partitions") {
  auto p32 = partitions(3, 2);
  REQUIRE(p32.size() == 2);
  CHECK(p32[0].parts == std::vector<int>{3});
  CHECK(p32[1].parts == std::vector<int>{2, 1});
  CHECK(partitions(2, 1).size() == 1);
  CHECK(partitions(4, 4).size() == 5);
  const int counts[] = {1, 2, 3, 5, 7, 11, 15, 22};
  for (int k = 1; k <= 8; ++k) CHECK(partitions(k, k).size() == static_cast<std::size_t>(counts[k - 1]));
}

TEST_CASE("irrep dimensions against tableau counts") {
  CHECK(sym_irrep_dim(partitions(4, 4).front()) == 1);
  Partition l21{{2, 1}, 3, 3};
  CHECK(sym_irrep_dim(l21) == 2);
  CHECK(sym_irrep_dim(Partition{{1, 1, 1}, 3, 3}) == 1);
  CHECK(unitary_irrep_dim(Partition{{1}, 1, 7}, 7L) == 7);
  CHECK(unitary_irrep_dim(Partition{{2}, 2, 2}, 2L) == 3);
  CHECK(unitary_irrep_dim(Partition{{1, 1}, 2, 2}, 2L) == 1);
  for (int k = 1; k <= 6; ++k)
    for (int d = 1; d <= 5; ++d)
      for (const auto& lam : partitions(k, d)) {
        CHECK(sym_irrep_dim(lam) == count_syt(lam.parts));
        CHECK(unitary_irrep_dim(lam, static_cast<long>(d)) == count_ssyt(lam.parts, d));
      }
}

TEST_CASE("Schur-Weyl dimension identities, exact") {
  for (int k = 1; k <= 6; ++k) {
    BigInt s = 0;
    for (const auto& lam : partitions(k, k)) s += sym_irrep_dim(lam) * sym_irrep_dim(lam);
    CHECK(s == factorial(k));
    for (int d = 1; d <= 6; ++d) {
      BigInt t = 0;
      for (const auto& lam : partitions(k, d)) t += sym_irrep_dim(lam) * unitary_irrep_dim(lam, static_cast<long>(d));
      CHECK(t == ipow(BigInt(d), k));
    }
  }
}

TEST_CASE("multiplicity floor holds exactly") {
  for (int k = 1; k <= 6; ++k)
    for (long d = k * k; d <= k * k + 24; ++d)
      for (const auto& lam : partitions(k, static_cast<int>(std::min<long>(d, k)))) {
        BigRat m(unitary_irrep_dim(lam, d));
        BigRat floor = minmult_floor(lam, d);
        CHECK(m >= floor);
        BigRat expect = BigRat(ipow(BigInt(d), k) * sym_irrep_dim(lam), factorial(k)) * (BigRat(1) - BigRat(k * k, d));
        CHECK(floor == expect);
      }
}

TEST_CASE("hook lengths") {
  auto h = hook_lengths(Partition{{3, 1}, 4, 2});
  CHECK(h[0] == std::vector<int>{4, 2, 1});
  CHECK(h[1] == std::vector<int>{1});
}
