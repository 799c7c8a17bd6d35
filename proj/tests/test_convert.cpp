#include "designforge/convert.hpp"
#include "designforge/symgroup.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace dforge;
using Dec = boost::multiprecision::cpp_dec_float_50;

namespace {

Dec qpow(int q, long e) { return pow(Dec(q), Dec(e)); }

double rel(double x, const Dec& ref) {
  Dec e = abs((Dec(x) - ref) / ref);
  return e.convert_to<double>();
}

// ell satisfies q^ell * eps * (1 - k^2/q^m)^4 >= 4 k!^(7/2)
bool swap_condition(int k, int q, int m, double eps, int ell) {
  Dec lhs = qpow(q, ell) * Dec(eps) * pow(1 - Dec(k * k) / qpow(q, m), 4);
  return lhs >= 4 * pow(Dec(factorial(k)), Dec(3.5));
}

Dec ref_ct(int q, int k, const std::vector<Party>& parties, bool proof_path) {
  Dec s = 0;
  for (const auto& pt : parties) s += 1 / qpow(q, 2 * pt.ell);
  Dec P = static_cast<int>(parties.size());
  Dec v = Dec(proof_path ? 5 : 25) * pow(Dec(factorial(k)), 2 * P) * k * sqrt(s);
  if (proof_path)
    for (const auto& pt : parties) {
      v /= 1 - Dec(k * k) * qpow(q, pt.ell - pt.m);
      v /= 1 - Dec(k * k) / qpow(q, pt.ell);
    }
  return v;
}

// |A|^k max_lambda d_lambda / m_lambda for one block, as a rational
BigRat exact_block_index(int k, long A) {
  BigRat best = 0;
  for (const auto& lam : partitions(k, static_cast<int>(std::min<long>(A, k)))) {
    BigRat r(sym_irrep_dim(lam), unitary_irrep_dim(lam, A));
    if (r > best) best = r;
  }
  return best * BigRat(ipow(BigInt(A), k));
}

}  // namespace

TEST_CASE("index bound examples") {
  IndexBound b = cb_index_bound({std::log(4.0)}, 2);
  CHECK(std::exp(b.log_coarse) == doctest::Approx(16.0).epsilon(1e-13));
  REQUIRE(b.log_exact.has_value());
  CHECK(std::exp(*b.log_exact) == doctest::Approx(16.0 / 6).epsilon(1e-13));
  for (double d : {2.0, 5.0, 100.0}) {
    IndexBound one = cb_index_bound({std::log(d)}, 1);
    REQUIRE(one.log_exact.has_value());
    CHECK(*one.log_exact == doctest::Approx(0.0));
    CHECK(one.log_coarse >= 0.0);
  }
  IndexBound big = cb_index_bound({std::log(1e6)}, 2);
  CHECK_FALSE(big.log_exact.has_value());
}

TEST_CASE("index bound variants against direct evaluation") {
  for (int k = 1; k <= 4; ++k)
    for (double A : {3.0, 17.0, 64.0, 1e5}) {
      IndexBound b = cb_index_bound({std::log(A), std::log(A + 1)}, k);
      double kf = std::tgamma(k + 1.0);
      double coarse = 1, display = 1, conv = 1;
      for (double x : {A, A + 1}) {
        double first = k * k < x ? 1 / (1 - k * k / x) : kInf;
        coarse *= kf * std::min(first, std::pow(x, k) / kf);
        display *= std::min(kf * first, std::pow(x, 2.0 * k));
        conv *= kf * std::min(first, std::pow(x, 2.0 * k) / kf);
      }
      CHECK(std::exp(b.log_coarse) == doctest::Approx(coarse).epsilon(1e-12));
      CHECK(std::exp(b.log_proof_display) == doctest::Approx(display).epsilon(1e-12));
      CHECK(std::exp(b.log_convert_form) == doctest::Approx(conv).epsilon(1e-12));
    }
}

TEST_CASE("exact index matches the block maximum") {
  for (int k = 1; k <= 6; ++k)
    for (long A : {2L, 3L, 5L, 8L, 16L, 36L, 37L, 64L, 200L, 1024L, 4096L}) {
      IndexBound b = cb_index_bound({std::log(static_cast<double>(A))}, k);
      REQUIRE(b.log_exact.has_value());
      CHECK(*b.log_exact == doctest::Approx(std::log(to_double(exact_block_index(k, A)))).epsilon(1e-12));
    }
}

TEST_CASE("exact index is below the coarse index once blocks hold k copies") {
  for (int k = 1; k <= 6; ++k)
    for (long A = k; A <= 4096; A += A < 80 ? 1 : 37) {
      IndexBound b = cb_index_bound({std::log(static_cast<double>(A))}, k);
      REQUIRE(b.log_exact.has_value());
      CHECK(*b.log_exact <= b.log_coarse + 1e-12);
      long B = std::min(2 * A + 1, 4096L);
      IndexBound two = cb_index_bound({std::log(static_cast<double>(A)), std::log(static_cast<double>(B))}, k);
      REQUIRE(two.log_exact.has_value());
      CHECK(*two.log_exact <= two.log_coarse + 1e-12);
    }
}

TEST_CASE("small blocks break the second coarse branch") {
  // two-row shape (3,3) on a qubit: d = 5, m = 1
  IndexBound b = cb_index_bound({std::log(2.0)}, 6);
  CHECK(std::exp(*b.log_exact) == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(std::exp(b.log_coarse) == doctest::Approx(64.0).epsilon(1e-12));
}

TEST_CASE("conversion to relative error") {
  IndexBound sixteen = cb_index_bound({std::log(4.0)}, 2);
  ConversionReport c = tpe_to_relative(0.01, sixteen);
  CHECK(c.epsilon == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(c.valid);
  ConversionReport z = tpe_to_relative(0.0, sixteen);
  CHECK(z.epsilon == 0.0);
  REQUIRE(z.n_required.has_value());
  CHECK(*z.n_required == 1);
  ConversionReport h = tpe_to_relative(0.5, sixteen);
  REQUIRE(h.n_required.has_value());
  CHECK(*h.n_required == 4);
  CHECK_FALSE(h.valid);
  ConversionReport one = tpe_to_relative(1.0, sixteen);
  CHECK_FALSE(one.valid);
  CHECK_FALSE(one.n_required.has_value());
  ConversionReport ex = tpe_to_relative(0.1, sixteen, true);
  CHECK(ex.used_exact_index);
  CHECK(ex.epsilon == doctest::Approx(0.1 * 16 / 6).epsilon(1e-12));
  CHECK_THROWS(tpe_to_relative(-0.1, sixteen));
}

TEST_CASE("swap design ell is minimal") {
  SwapEllReport r = swap_design_ell(2, 2, 20, std::ldexp(1.0, -10));
  CHECK(r.ell == 16);
  for (int k : {1, 2, 3, 4})
    for (int q : {2, 3, 7})
      for (int m : {4, 8, 20, 40})
        for (double eps : {0.9, 0.25, 1e-3, 1e-9}) {
          if (static_cast<double>(k) * k >= std::pow(q, m)) continue;
          SwapEllReport s = swap_design_ell(k, q, m, eps);
          CHECK(swap_condition(k, q, m, eps, s.ell));
          if (s.ell > 0) CHECK_FALSE(swap_condition(k, q, m, eps, s.ell - 1));
          CHECK(s.feasible == (2 * s.ell <= m));
          CHECK(s.ell_proof_path <= s.ell);
        }
  CHECK(swap_design_ell(2, 2, 10, 0.9).ell <= swap_design_ell(2, 2, 10, 1e-6).ell);
  int k1 = swap_design_ell(1, 2, 6, 0.1).ell;
  CHECK(k1 == static_cast<int>(std::ceil(std::log2(4 / 0.1) - 4 * std::log2(1 - 1.0 / 64))));
  CHECK_THROWS_AS(swap_design_ell(100, 2, 4, 0.1), DomainError);
  CHECK_THROWS_AS(swap_design_ell(3, 2, 3, 0.1), DomainError);
}

TEST_CASE("crosstwirl design epsilon") {
  CrosstwirlEpsReport k1 = crosstwirl_design_eps(multi_params(2, 1, {{9, 3}, {12, 4}}));
  CHECK(k1.epsilon == doctest::Approx(25 * std::sqrt(std::pow(2, -6) + std::pow(2, -8))).epsilon(1e-13));
  CrosstwirlEpsReport ex = crosstwirl_design_eps(multi_params(2, 2, {{60, 20}, {60, 20}}));
  CHECK(ex.epsilon == doctest::Approx(25 * 16 * 2 * std::sqrt(2.0) * std::pow(2, -20)).epsilon(1e-13));
  CHECK(ex.epsilon == doctest::Approx(1.08e-3).epsilon(1e-2));
  CHECK(ex.preconditions_met());
  CHECK(ex.valid);
  REQUIRE(ex.comm_qudits.size() == 2);
  CHECK(ex.comm_qudits[0] == 40);
  CHECK(ex.comm_ebits[1] == doctest::Approx(40.0));
  CrosstwirlEpsReport dbl = crosstwirl_design_eps(multi_params(2, 2, {{120, 40}, {120, 40}}));
  CHECK(dbl.epsilon / ex.epsilon == doctest::Approx(std::pow(2, -20)).epsilon(1e-12));
  CHECK_FALSE(crosstwirl_design_eps(multi_params(2, 3, {{3, 1}, {3, 1}})).preconditions_met());

  std::mt19937 rng(7110);
  for (int t = 0; t < 20; ++t) {
    int q = std::uniform_int_distribution<int>(2, 5)(rng);
    int k = std::uniform_int_distribution<int>(1, 4)(rng);
    int P = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<Party> parties;
    for (int i = 0; i < P; ++i) {
      int l = std::uniform_int_distribution<int>(4, 40)(rng);
      parties.push_back({3 * l + std::uniform_int_distribution<int>(0, 6)(rng), l});
    }
    CrosstwirlEpsReport r = crosstwirl_design_eps(multi_params(q, k, parties));
    CHECK(rel(r.epsilon, ref_ct(q, k, parties, false)) < 1e-12);
    CHECK(rel(r.proof_path, ref_ct(q, k, parties, true)) < 1e-12);
  }
}

TEST_CASE("error composition") {
  CHECK(compose_errors({0.1, 0.1}) == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(compose_errors({}, 0.03) == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(compose_errors({}) == 0.0);
  std::vector<double> many(100, 1e-4);
  Dec ref = pow(Dec(1) + Dec("1e-4"), 100) - 1;
  CHECK(rel(compose_errors(many), ref) < 1e-12);
  CHECK(compose_errors({0.2}, 0.1) == doctest::Approx(1.1 * 1.2 - 1).epsilon(1e-14));

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> e(1 + t % 7);
    double sum = 0;
    for (double& x : e) sum += (x = u(rng));
    double c = compose_errors(e);
    CHECK(c >= sum - 1e-15);
    CHECK(c <= std::expm1(sum) + 1e-15);
    auto more = e;
    more.push_back(u(rng));
    CHECK(compose_errors(more) >= c);
  }
}
