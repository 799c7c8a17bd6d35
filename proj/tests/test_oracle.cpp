#include "designforge/angle.hpp"
#include "designforge/gram.hpp"
#include "designforge/oracle.hpp"
#include "designforge/symgroup.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

using namespace dforge;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = g(rng);
  return x;
}

// Operator that moves copy c to copy pi(c) on k copies of dimension dc.
Eigen::MatrixXd copy_permutation(const Perm& pi, long dc) {
  int k = pi.degree();
  long D = 1;
  for (int i = 0; i < k; ++i) D *= dc;
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(D, D);
  std::vector<long> in(k), out(k);
  for (long x = 0; x < D; ++x) {
    long t = x;
    for (int c = k - 1; c >= 0; --c) {
      in[c] = t % dc;
      t /= dc;
    }
    for (int c = 0; c < k; ++c) out[pi.image[c]] = in[c];
    long y = 0;
    for (int c = 0; c < k; ++c) y = y * dc + out[c];
    op(y, x) = 1.0;
  }
  return op;
}

// Orthogonal projection of x onto the span of copy permutations.
Eigen::MatrixXd project_onto_permutations(const Eigen::MatrixXd& x, int k, long dc) {
  std::vector<Eigen::MatrixXd> ops;
  for (const auto& p : enumerate_group(k)) ops.push_back(copy_permutation(p, dc));
  auto n = static_cast<Eigen::Index>(ops.size());
  Eigen::MatrixXd G(n, n);
  Eigen::VectorXd t(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    t(a) = (ops[a].array() * x.array()).sum();
    for (Eigen::Index b = 0; b < n; ++b) G(a, b) = (ops[a].array() * ops[b].array()).sum();
  }
  Eigen::VectorXd c = G.completeOrthogonalDecomposition().solve(t);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (Eigen::Index a = 0; a < n; ++a) out += c(a) * ops[a];
  return out;
}

// Dense superoperator acting on column-stacked matrices.
Eigen::MatrixXd superoperator(const ProtocolChannel& c) {
  ChannelOp op(c);
  auto D = static_cast<Eigen::Index>(c.dim());
  Eigen::MatrixXd S(D * D, D * D);
  for (Eigen::Index j = 0; j < D; ++j)
    for (Eigen::Index i = 0; i < D; ++i) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(D, D);
      e(i, j) = 1.0;
      Eigen::MatrixXd y = op.apply(e);
      S.col(j * D + i) = Eigen::Map<const Eigen::VectorXd>(y.data(), D * D);
    }
  return S;
}

double dense_norm_diff(const ProtocolChannel& a, const ProtocolChannel& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(superoperator(a) - superoperator(b));
  return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("space layout") {
  SiteSpace s{{2, 3}, 2};
  CHECK(s.copy_dim() == 6);
  CHECK(s.dim() == 36);
}

TEST_CASE("full-support twirl equals projection onto copy permutations") {
  for (int k : {1, 2, 3})
    for (std::vector<int> dims : {std::vector<int>{2}, std::vector<int>{3}, std::vector<int>{2, 2}}) {
      SiteSpace s{dims, k};
      if (s.dim() > 512) continue;
      std::vector<int> all;
      for (int i = 0; i < static_cast<int>(dims.size()); ++i) all.push_back(i);
      auto x = gaussian(static_cast<Eigen::Index>(s.dim()), 11 + k);
      Eigen::MatrixXd t = exact_twirl_apply(s, TwirlSpec{all}, x);
      Eigen::MatrixXd ref = project_onto_permutations(x, k, static_cast<long>(s.copy_dim()));
      CHECK((t - ref).norm() <= 1e-10 * x.norm());
    }
}

TEST_CASE("twirl of a qubit pair basis operator") {
  SiteSpace s{{2}, 2};
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 4);
  x(1, 2) = 1.0;  // |01><10|
  Eigen::MatrixXd swap = copy_permutation(make_perm({1, 0}), 2);
  Eigen::MatrixXd expect = -Eigen::MatrixXd::Identity(4, 4) / 6.0 + swap / 3.0;
  CHECK((exact_twirl_apply(s, TwirlSpec{{0}}, x) - expect).norm() < 1e-14);
}

TEST_CASE("twirl properties on partial supports") {
  SiteSpace s{{2, 3, 2}, 2};
  TwirlSpec t{{0, 2}};
  auto D = static_cast<Eigen::Index>(s.dim());
  Eigen::MatrixXd x = gaussian(D, 5), y = gaussian(D, 6);
  Eigen::MatrixXd tx = exact_twirl_apply(s, t, x);
  CHECK((exact_twirl_apply(s, t, tx) - tx).norm() <= 1e-10 * tx.norm());
  double lhs = (exact_twirl_apply(s, t, x).array() * y.array()).sum();
  double rhs = (x.array() * exact_twirl_apply(s, t, y).array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  CHECK(tx.trace() == doctest::Approx(x.trace()).epsilon(1e-10));
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(D, D);
  CHECK((exact_twirl_apply(s, t, id) - id).norm() < 1e-10);

  Eigen::MatrixXcd xc = x.cast<cplx>() + cplx(0, 1) * y.cast<cplx>();
  Eigen::MatrixXcd tc = exact_twirl_apply(s, t, xc);
  CHECK((tc.real() - tx).norm() < 1e-10);
  CHECK((tc.imag() - exact_twirl_apply(s, t, y)).norm() < 1e-10);
}

TEST_CASE("single-copy twirl is the depolarizer on its support") {
  SiteSpace s{{2, 3}, 1};
  Eigen::MatrixXd x = gaussian(6, 9);
  Eigen::MatrixXd t = exact_twirl_apply(s, TwirlSpec{{0}}, x);
  Eigen::MatrixXd reduced = Eigen::MatrixXd::Zero(3, 3);
  for (int a = 0; a < 2; ++a) reduced += x.block(3 * a, 3 * a, 3, 3);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(6, 6);
  for (int a = 0; a < 2; ++a) expect.block(3 * a, 3 * a, 3, 3) = reduced / 2.0;
  CHECK((t - expect).norm() < 1e-12);
  Eigen::MatrixXd whole = exact_twirl_apply(s, TwirlSpec{{0, 1}}, x);
  CHECK((whole - Eigen::MatrixXd::Identity(6, 6) * x.trace() / 6.0).norm() < 1e-12);
}

TEST_CASE("permutation operators are twirl fixed points") {
  SiteSpace s{{2, 2}, 3};
  auto ops = block_permutation_operators(s, {{0, 1}});
  CHECK(ops.size() == 6);
  for (const auto& o : ops) CHECK((exact_twirl_apply(s, TwirlSpec{{0, 1}}, o) - o).norm() < 1e-10);
}

TEST_CASE("swap layers") {
  SiteSpace s{{2, 3, 2, 3}, 2};
  SwapSpec sw{{{0, 2}, {1, 3}}};
  auto perm = swap_permutation(s, sw);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(perm[perm[i]] == i);
  CHECK_THROWS(swap_permutation(s, SwapSpec{{{0, 1}}}));
}

TEST_CASE("matrix-free norm matches the dense superoperator") {
  SiteSpace s{{2, 2}, 2};
  auto P = twirl_channel(s, {{0}, {1}});
  auto R = twirl_channel(s, {{0, 1}});
  auto sw = swap_channel(s, SwapSpec{{{0, 1}}});
  auto Q = twirl_channel(s, {{0}});
  for (const auto& proto : {P, then(P, Q), then(then(Q, sw), P), power(then(P, Q), 3)}) {
    double dense = dense_norm_diff(proto, R);
    CHECK(norm_2to2_diff(proto, R).value == doctest::Approx(dense).epsilon(1e-8));
  }
  SiteSpace s2{{2, 3}, 2};
  auto P2 = twirl_channel(s2, {{0}, {1}});
  auto R2 = twirl_channel(s2, {{0, 1}});
  CHECK(norm_2to2_diff(P2, R2).value == doctest::Approx(dense_norm_diff(P2, R2)).epsilon(1e-8));
  CHECK(norm_2to2_diff(R, R).value <= 1e-11);
  CHECK_THROWS(norm_2to2_diff(P, R, 1e-13));
  CHECK_THROWS(norm_2to2_diff(P, R2));
}

TEST_CASE("adjoint channel") {
  SiteSpace s{{2, 2}, 2};
  auto c = then(then(twirl_channel(s, {{0}}), swap_channel(s, SwapSpec{{{0, 1}}})), twirl_channel(s, {{1}}));
  Eigen::MatrixXd S = superoperator(c);
  CHECK((superoperator(adjoint(c)) - S.transpose()).norm() < 1e-10);
  CHECK((ChannelOp(c).adjoint().apply(gaussian(16, 1)) - ChannelOp(adjoint(c)).apply(gaussian(16, 1))).norm() < 1e-10);
}

TEST_CASE("protocol channels are unital and trace preserving") {
  for (auto p : {crosstwirl_params(2, 2, 2, 1), swap_params(2, 2, 2, 1), multi_params(2, 3, {{1, 1}, {1, 1}})}) {
    auto ch = protocol_channels(p);
    auto D = static_cast<Eigen::Index>(ch.space.dim());
    Eigen::MatrixXd x = gaussian(D, 3);
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(D, D);
    for (const auto& c : {ch.P, ch.Q, ch.R}) {
      ChannelOp op(c);
      CHECK(op.apply(x).trace() == doctest::Approx(x.trace()).epsilon(1e-10));
      CHECK((op.apply(id) - id).norm() < 1e-9);
    }
  }
}

TEST_CASE("oracle norm equals the exact angle") {
  for (auto p : {crosstwirl_params(2, 2, 2, 1), swap_params(2, 2, 2, 1), multi_params(3, 2, {{1, 1}, {1, 1}}),
                 multi_params(2, 2, {{1, 1}, {2, 1}})}) {
    AngleReport a = exact_angle(p);
    REQUIRE(a.exact_angle.has_value());
    auto ch = protocol_channels(p);
    CHECK(norm_2to2_diff(then(ch.P, ch.Q), ch.R).value == doctest::Approx(*a.exact_angle).epsilon(1e-8));
  }
  auto mp = multi_params(2, 3, {{1, 1}, {1, 1}});
  ExactOptions pinv;
  pinv.allow_rank_deficient = true;
  AngleReport a = exact_angle(mp, pinv);
  auto ch = protocol_channels(mp);
  CHECK(std::abs(norm_2to2_diff(then(ch.P, ch.Q), ch.R).value - *a.exact_angle) <= 1e-8);
}

TEST_CASE("alternating projections converge at the angle rate") {
  for (auto p : {crosstwirl_params(2, 2, 2, 1), swap_params(2, 2, 2, 1)}) {
    double c = *exact_angle(p).exact_angle;
    auto norms = alternating_norms(protocol_channels(p), 4);
    REQUIRE(norms.size() == 4);
    for (int n = 1; n <= 4; ++n) CHECK(norms[n - 1] <= std::pow(c, 2 * n - 1) + 1e-8);
  }
}

TEST_CASE("R is dominated by P and Q") {
  auto ch = protocol_channels(swap_params(2, 2, 2, 1));
  ChannelOp P(ch.P), Q(ch.Q), R(ch.R);
  Eigen::MatrixXd x = gaussian(static_cast<Eigen::Index>(ch.space.dim()), 17);
  Eigen::MatrixXd r = R.apply(x);
  CHECK((P.apply(r) - r).norm() < 1e-10 * x.norm());
  CHECK((Q.apply(r) - r).norm() < 1e-10 * x.norm());
  CHECK((R.apply(P.apply(x)) - r).norm() < 1e-10 * x.norm());
  CHECK((R.apply(Q.apply(x)) - r).norm() < 1e-10 * x.norm());
}

TEST_CASE("relative error from Choi matrices") {
  SiteSpace s{{2, 2}, 2};
  auto P = twirl_channel(s, {{0}, {1}});
  auto R = twirl_channel(s, {{0, 1}});
  RelativeErrorReport same = choi_relative_error(R, R);
  CHECK(same.support_ok);
  CHECK(std::abs(same.epsilon()) < 1e-9);
  RelativeErrorReport pr = choi_relative_error(P, R);
  CHECK(pr.support_ok);
  CHECK(pr.epsilon() > 0.0);
  RelativeErrorReport st = choi_relative_error_commutant(P, R, {{0}, {1}});
  CHECK(st.eps_plus == doctest::Approx(pr.eps_plus).epsilon(1e-8));
  CHECK(st.eps_minus == doctest::Approx(pr.eps_minus).epsilon(1e-8));

  Eigen::MatrixXd jr = choi_matrix(R);
  RelativeErrorReport scaled = relative_error_from_choi(1.25 * jr, jr);
  CHECK(scaled.eps_plus == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(scaled.epsilon() == doctest::Approx(0.25).epsilon(1e-9));
  Eigen::MatrixXd jp = choi_matrix(P);
  CHECK(relative_error_from_choi(jp, jr).support_ok);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jr);
  Eigen::VectorXd null = es.eigenvectors().col(0);
  REQUIRE(es.eigenvalues()(0) < 1e-10);
  RelativeErrorReport leak = relative_error_from_choi(jr + null * null.transpose(), jr);
  CHECK_FALSE(leak.support_ok);

  // Choi of a channel is positive and has the identity as partial trace
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ej(jp);
  CHECK(ej.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("relative error shrinks as more qudits are swapped") {
  std::vector<double> eps;
  for (int l = 0; l <= 1; ++l) {
    auto ch = protocol_channels(swap_params(2, 2, 2, l));
    eps.push_back(choi_relative_error_commutant(then(then(ch.P, ch.swap), ch.P), ch.R, ch.blocks).epsilon());
  }
  CHECK(eps[1] < eps[0]);
}

TEST_CASE("Haar unitaries") {
  for (int d : {1, 2, 5}) {
    Eigen::MatrixXcd u = haar_unitary(d, 42, 0, 3);
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(d, d)).norm() < 1e-12);
    CHECK((haar_unitary(d, 42, 0, 3) - u).norm() == 0.0);
  }
  CHECK((haar_unitary(3, 42, 0, 3) - haar_unitary(3, 42, 0, 4)).norm() > 1e-3);
  CHECK((haar_unitary(3, 42, 0, 3) - haar_unitary(3, 42, 1, 3)).norm() > 1e-3);
}

TEST_CASE("sampled twirls converge statistically") {
  for (int k : {1, 2}) {
    SiteSpace s{{2}, k};
    auto exact = twirl_channel(s, {{0}});
    const int n = 10000;
    SampledChannel sc = haar_sample_channel(exact, n, 2024);
    Eigen::MatrixXcd J = sc.choi();
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (sc.sample_choi(i) - J).squaredNorm();
    double sigma = std::sqrt(var / (n - 1) / n);
    double dist = (J - choi_matrix_complex(exact)).norm();
    CAPTURE(k);
    CHECK(dist <= 5.0 * sigma);
    CHECK(dist > 0.0);
  }
}

TEST_CASE("sampling is independent of the worker count") {
  SiteSpace s{{2}, 2};
  auto exact = twirl_channel(s, {{0}});
  setenv("DESIGNFORGE_THREADS", "1", 1);
  Eigen::MatrixXcd a = haar_sample_channel(exact, 300, 77).choi();
  setenv("DESIGNFORGE_THREADS", "5", 1);
  Eigen::MatrixXcd b = haar_sample_channel(exact, 300, 77).choi();
  unsetenv("DESIGNFORGE_THREADS");
  CHECK((a.array() == b.array()).all());
  Eigen::MatrixXcd c = haar_sample_channel(exact, 300, 78).choi();
  CHECK((a - c).norm() > 0.0);
}

TEST_CASE("capacity limits") {
  CHECK_THROWS_AS(choi_matrix(twirl_channel(SiteSpace{{2, 2, 2, 2}, 2}, {{0}})), CapacityError);
  CHECK_THROWS_AS(ChannelOp(twirl_channel(SiteSpace{{2}, 4}, {{0}})), CapacityError);
  CHECK_THROWS(haar_sample_channel(twirl_channel(SiteSpace{{2}, 1}, {{0}}), 0, 1));
}
