#include "designforge/angle.hpp"

#include "designforge/gram.hpp"
#include "designforge/lanczos.hpp"
#include "designforge/symgroup.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace dforge {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string kind_name(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::swap: return "swap";
    case ProtocolKind::crosstwirl: return "crosstwirl";
    case ProtocolKind::multi_crosstwirl: return "multi_crosstwirl";
  }
  return "?";
}

ProtocolKind parse_kind(const std::string& s) {
  if (s == "swap") return ProtocolKind::swap;
  if (s == "crosstwirl" || s == "ct") return ProtocolKind::crosstwirl;
  if (s == "multi_crosstwirl" || s == "multict" || s == "multi") return ProtocolKind::multi_crosstwirl;
  throw DomainError("unknown protocol kind: " + s);
}

int ProtocolParams::total_m() const {
  int s = 0;
  for (const auto& p : parties) s += p.m;
  return s;
}

int ProtocolParams::total_ell() const {
  int s = 0;
  for (const auto& p : parties) s += p.ell;
  return s;
}

ProtocolParams swap_params(int q, int k, int m, int ell) {
  return ProtocolParams{q, k, {{m, ell}, {m, ell}}, ProtocolKind::swap};
}
ProtocolParams crosstwirl_params(int q, int k, int m, int ell) {
  return ProtocolParams{q, k, {{m, ell}, {m, ell}}, ProtocolKind::crosstwirl};
}
ProtocolParams multi_params(int q, int k, std::vector<Party> parties) {
  return ProtocolParams{q, k, std::move(parties), ProtocolKind::multi_crosstwirl};
}

void validate_params(const ProtocolParams& p, bool allow_degenerate) {
  if (p.q < 2) throw DomainError("local dimension q must be >= 2");
  if (p.k < 1) throw DomainError("copy count k must be >= 1");
  for (const auto& pt : p.parties)
    if (pt.m < 1 || pt.ell < 0 || pt.ell > pt.m) throw DomainError("party needs m >= 1 and 0 <= l <= m");
  switch (p.kind) {
    case ProtocolKind::swap:
      if (p.P() != 2 || p.parties[0].m != p.parties[1].m || p.parties[0].ell != p.parties[1].ell)
        throw DomainError("swap needs two identical parties");
      if (2 * p.parties[0].ell > p.parties[0].m) throw DomainError("swap needs l <= m/2");
      break;
    case ProtocolKind::crosstwirl:
      if (p.P() != 2 || p.parties[0].m != p.parties[1].m || p.parties[0].ell != p.parties[1].ell)
        throw DomainError("crosstwirl needs two identical parties");
      if (p.parties[0].ell < 1) throw DomainError("crosstwirl needs l >= 1");
      if (p.parties[0].ell >= p.parties[0].m && !allow_degenerate)
        throw DomainError("crosstwirl needs l < m");
      break;
    case ProtocolKind::multi_crosstwirl:
      if (p.P() < 1) throw DomainError("multipartite crosstwirl needs parties");
      for (const auto& pt : p.parties)
        if (pt.ell < 1) throw DomainError("multipartite crosstwirl needs l_p >= 1");
      break;
  }
}

bool AngleReport::preconditions_met() const {
  return std::all_of(preconditions.begin(), preconditions.end(), [](const NamedCheck& c) { return c.ok; });
}

bool TpeBound::preconditions_met() const {
  return std::all_of(checks.begin(), checks.end(), [](const NamedCheck& c) { return c.ok; });
}

namespace {

// sign of lhs - mult * q^e, exact while q^e is representable, else q^e wins
int cmp_qpow(const BigInt& lhs, int q, long e, const BigInt& mult = 1) {
  double bits = static_cast<double>(e) * std::log2(static_cast<double>(q));
  if (bits > 8192.0) return -1;
  BigInt rhs = mult * ipow(BigInt(q), e);
  return lhs < rhs ? -1 : (lhs == rhs ? 0 : 1);
}

// x * q^-e
double scaled(double x, int q, double e) { return x * std::exp(-e * std::log(static_cast<double>(q))); }

// ln(x^-K K! binom(x+K-1, K)) for x = exp(log_x)
double log_cancel(double log_x, int k) {
  double s = 0.0;
  for (int j = 1; j < k; ++j) s += std::log1p(j * std::exp(-log_x));
  return s;
}

std::size_t ipow_sz(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void check_cap(const ProtocolParams& p) {
  if (p.k > kMaxProtocolDegree) throw CapacityError("protocol matrices need k <= 5");
  std::size_t n1 = sym_group(p.k).order();
  if (ipow_sz(n1, p.P()) > 14400) throw CapacityError("tuple index k!^P exceeds 14400");
}

Eigen::MatrixXd factor(int k, int q, int s) {
  return gram_matrix_log(k, s * std::log(static_cast<double>(q))).entries;
}

// Tensor over parties of per-party (n1 x n1) tables, as a dense n x n matrix.
Eigen::MatrixXd kron_dense(const std::vector<Eigen::MatrixXd>& f) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& m : f) {
    Eigen::MatrixXd next(out.rows() * m.rows(), out.cols() * m.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * m.rows(), j * m.cols(), m.rows(), m.cols()) = out(i, j) * m;
    out.swap(next);
  }
  return out;
}

// Rows indexed by pi, columns by tuples: prod_p f_p(pi, s_p).
Eigen::MatrixXd tuple_table(const std::vector<Eigen::MatrixXd>& f) {
  const Eigen::Index n1 = f.front().rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(n1, 1);
  for (const auto& m : f) {
    Eigen::MatrixXd next(n1, out.cols() * n1);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index s = 0; s < n1; ++s) next.col(j * n1 + s) = out.col(j).cwiseProduct(m.col(s));
    out.swap(next);
  }
  return out;
}

// Apply a per-mode operation to a tuple-indexed vector.
template <class Op>
void apply_modes(Eigen::VectorXd& v, Eigen::Index n1, int P, Op&& op) {
  for (int p = 0; p < P; ++p) {
    std::size_t left = ipow_sz(static_cast<std::size_t>(n1), p);
    Eigen::Index right = static_cast<Eigen::Index>(ipow_sz(static_cast<std::size_t>(n1), P - 1 - p));
    for (std::size_t l = 0; l < left; ++l) {
      Eigen::Map<RowMat> y(v.data() + static_cast<Eigen::Index>(l) * n1 * right, n1, right);
      op(p, y);
    }
  }
}

struct SpdSolver {
  bool pinv = false;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd pinv_mat;
  int rank = 0;

  SpdSolver(const Eigen::MatrixXd& g, bool allow_pinv, const char* what) {
    llt.compute(g);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      double dmin = llt.matrixLLT().diagonal().minCoeff();
      double dmax = llt.matrixLLT().diagonal().maxCoeff();
      ok = dmin > 1e-7 * dmax;
    }
    if (ok) {
      rank = static_cast<int>(g.rows());
      return;
    }
    if (!allow_pinv) throw NumericError(std::string("Gram matrix not positive definite: ") + what);
    pinv = true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const auto& ev = es.eigenvalues();
    double cut = 1e-10 * ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > cut) {
        inv(i) = 1.0 / ev(i);
        ++rank;
      }
    pinv_mat = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return pinv ? Eigen::MatrixXd(pinv_mat * b) : Eigen::MatrixXd(llt.solve(b)); }
};

struct Pencil {
  ProtocolParams prm;
  int P = 0;
  Eigen::Index n1 = 0, n = 0;
  std::vector<Eigen::MatrixXd> F;  // G at q^m_p
  std::vector<Eigen::MatrixXd> E;  // G at q^l_p
  std::vector<Eigen::MatrixXd> H;  // G at q^(m_p - l_p)
  Eigen::MatrixXd TL, TR;          // swap: G at q^l and q^(m-l)
};

Pencil make_pencil(const ProtocolParams& p) {
  Pencil pc;
  pc.prm = p;
  pc.P = p.P();
  pc.n1 = static_cast<Eigen::Index>(sym_group(p.k).order());
  pc.n = static_cast<Eigen::Index>(ipow_sz(static_cast<std::size_t>(pc.n1), pc.P));
  for (const auto& pt : p.parties) {
    pc.F.push_back(factor(p.k, p.q, pt.m));
    pc.E.push_back(factor(p.k, p.q, pt.ell));
    pc.H.push_back(factor(p.k, p.q, pt.m - pt.ell));
  }
  if (p.kind == ProtocolKind::swap) {
    pc.TL = factor(p.k, p.q, p.parties[0].ell);
    pc.TR = factor(p.k, p.q, p.parties[0].m - p.parties[0].ell);
  }
  return pc;
}

Eigen::MatrixXd dense_M(const Pencil& pc) {
  const Eigen::Index n1 = pc.n1;
  Eigen::MatrixXd M(n1 * n1, n1 * n1);
  parallel_for(static_cast<std::size_t>(n1 * n1), [&](std::size_t row) {
    Eigen::Index pi = static_cast<Eigen::Index>(row) / n1, rho = static_cast<Eigen::Index>(row) % n1;
    for (Eigen::Index om = 0; om < n1; ++om)
      for (Eigen::Index chi = 0; chi < n1; ++chi)
        M(static_cast<Eigen::Index>(row), om * n1 + chi) =
            pc.TL(pi, chi) * pc.TR(pi, om) * pc.TL(rho, om) * pc.TR(rho, chi);
  });
  return M;
}

// x -> M x for the swap pencil, O(k!^4) through per-row matrix products.
Eigen::VectorXd apply_M(const Pencil& pc, const Eigen::VectorXd& x) {
  const Eigen::Index n1 = pc.n1;
  Eigen::Map<const RowMat> X(x.data(), n1, n1);
  Eigen::VectorXd y(n1 * n1);
  for (Eigen::Index pi = 0; pi < n1; ++pi) {
    // W(rho, chi) = TL(pi, chi) TR(rho, chi)
    Eigen::MatrixXd W = pc.TR * pc.TL.row(pi).transpose().asDiagonal();
    Eigen::MatrixXd S = X * W.transpose();  // (omega, rho)
    // V(rho, omega) = TL(rho, omega) TR(pi, omega)
    Eigen::MatrixXd V = pc.TL * pc.TR.row(pi).transpose().asDiagonal();
    y.segment(pi * n1, n1) = V.cwiseProduct(S.transpose()).rowwise().sum();
  }
  return y;
}

// z = N x with N(pi, s) = prod_p F_p(pi, s_p)
Eigen::VectorXd apply_tuple(const std::vector<Eigen::MatrixXd>& f, const Eigen::VectorXd& x) {
  const Eigen::Index n1 = f.front().rows();
  const int P = static_cast<int>(f.size());
  Eigen::VectorXd z(n1);
  for (Eigen::Index pi = 0; pi < n1; ++pi) {
    Eigen::VectorXd t = x;
    for (int p = P - 1; p >= 0; --p) {
      Eigen::Map<const RowMat> T(t.data(), t.size() / n1, n1);
      Eigen::VectorXd nt = T * f[p].row(pi).transpose();
      t.swap(nt);
    }
    z(pi) = t(0);
  }
  return z;
}

Eigen::VectorXd apply_tuple_t(const std::vector<Eigen::MatrixXd>& f, const Eigen::VectorXd& z, Eigen::Index n) {
  const Eigen::Index n1 = f.front().rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index pi = 0; pi < n1; ++pi) {
    Eigen::VectorXd u = Eigen::VectorXd::Constant(1, z(pi));
    for (const auto& m : f) {
      Eigen::VectorXd nu(u.size() * n1);
      for (Eigen::Index j = 0; j < u.size(); ++j) nu.segment(j * n1, n1) = u(j) * m.row(pi).transpose();
      u.swap(nu);
    }
    out += u;
  }
  return out;
}

Eigen::MatrixXd dense_A(const Pencil& pc, const SpdSolver& gm, const SpdSolver* gl, const SpdSolver* b_solver) {
  Eigen::MatrixXd N = tuple_table(pc.F);
  Eigen::MatrixXd A;
  if (pc.prm.kind == ProtocolKind::swap) {
    Eigen::MatrixXd M = dense_M(pc);
    A = M * b_solver->solve(M);
  } else {
    Eigen::MatrixXd Nl = tuple_table(pc.E);
    Eigen::MatrixXd W = Nl.transpose() * gl->solve(Nl);
    A = kron_dense(pc.H).cwiseProduct(W);
  }
  A -= N.transpose() * gm.solve(N);
  return 0.5 * (A + A.transpose());
}

}  // namespace

Eigen::MatrixXd build_M(const ProtocolParams& p) {
  validate_params(p);
  if (p.kind != ProtocolKind::swap) throw DomainError("M is defined for swap parameters");
  check_cap(p);
  return dense_M(make_pencil(p));
}

Eigen::MatrixXd build_N(const ProtocolParams& p) {
  check_cap(p);
  std::vector<Eigen::MatrixXd> f;
  for (const auto& pt : p.parties) f.push_back(factor(p.k, p.q, pt.m));
  return tuple_table(f);
}

Eigen::MatrixXd build_N_ell(const ProtocolParams& p) {
  check_cap(p);
  std::vector<Eigen::MatrixXd> f;
  for (const auto& pt : p.parties) f.push_back(factor(p.k, p.q, pt.ell));
  return tuple_table(f);
}

BoundConstants bipartite_constants(const ProtocolParams& p) {
  const double k2 = static_cast<double>(p.k) * p.k;
  const int m = p.parties.at(0).m, l = p.parties.at(0).ell;
  BoundConstants c;
  double ea = scaled(k2 / 2.0, p.q, m);
  double ec = scaled(k2 / 2.0, p.q, 2.0 * l);
  c.finite = ea < 1.0 && ec < 1.0;
  c.log_a = ea < 1.0 ? -2.0 * std::log1p(-ea) : kInf;
  c.log_b = -scaled(k2 / 2.0, p.q, 2.0 * m);
  c.log_c = ec < 1.0 ? -std::log1p(-ec) : kInf;
  c.log_g = scaled(k2, p.q, m - l);
  c.a = exp_or_inf(c.log_a);
  c.b = std::exp(c.log_b);
  c.c = exp_or_inf(c.log_c);
  c.g = exp_or_inf(c.log_g);
  return c;
}

BoundConstants multipartite_constants(const ProtocolParams& p) {
  const double k2 = static_cast<double>(p.k) * p.k;
  BoundConstants c;
  c.log_a = 0.0;
  c.log_g = 0.0;
  for (const auto& pt : p.parties) {
    double ea = scaled(k2 / 2.0, p.q, pt.m);
    if (ea >= 1.0) c.finite = false;
    c.log_a += ea < 1.0 ? -std::log1p(-ea) : kInf;
    c.log_g += scaled(k2 / 2.0, p.q, pt.m - pt.ell);
  }
  double ec = scaled(k2 / 2.0, p.q, p.total_ell());
  if (ec >= 1.0) c.finite = false;
  c.log_b = -scaled(k2 / 2.0, p.q, p.total_m());
  c.log_c = ec < 1.0 ? -std::log1p(-ec) : kInf;
  c.a = exp_or_inf(c.log_a);
  c.b = std::exp(c.log_b);
  c.c = exp_or_inf(c.log_c);
  c.g = exp_or_inf(c.log_g);
  return c;
}

namespace {

std::vector<NamedCheck> swap_checks(const ProtocolParams& p) {
  const int m = p.parties[0].m, l = p.parties[0].ell;
  BigInt k = p.k;
  return {{"k <= q^m", cmp_qpow(k, p.q, m) <= 0},
          {"l <= m/2", 2 * l <= m},
          {"k^2 < 2q^m", cmp_qpow(k * k, p.q, m, 2) < 0}};
}

std::vector<NamedCheck> crosstwirl_checks(const ProtocolParams& p) {
  const int m = p.parties[0].m, l = p.parties[0].ell;
  BigInt k = p.k;
  return {{"l < m", l < m},
          {"k <= q^(2l)", cmp_qpow(k, p.q, 2L * l) <= 0},
          {"k <= q^m", cmp_qpow(k, p.q, m) <= 0},
          {"k^2 < 2q^(2l)", cmp_qpow(k * k, p.q, 2L * l, 2) < 0}};
}

std::vector<NamedCheck> multi_checks(const ProtocolParams& p) {
  BigInt k = p.k;
  bool all_m = true;
  for (const auto& pt : p.parties) all_m = all_m && cmp_qpow(k, p.q, pt.m) <= 0;
  return {{"K <= q^m_p for all p", all_m},
          {"K <= q^L", cmp_qpow(k, p.q, p.total_ell()) <= 0},
          {"K^2 < 2q^L", cmp_qpow(k * k, p.q, p.total_ell(), 2) < 0}};
}

// c^2 = expm1(t1) - 2 expm1(t2) + expm1(t3), accurate when all t are small
double three_term(double t1, double t2, double t3) {
  if (!std::isfinite(t1)) return kInf;
  return std::expm1(t1) - 2.0 * std::expm1(t2) + std::expm1(t3);
}

}  // namespace

double bound_swap(const ProtocolParams& p) {
  validate_params(p);
  auto checks = swap_checks(p);
  for (const auto& c : checks)
    if (!c.ok) return kInf;
  const int m = p.parties[0].m, l = p.parties[0].ell;
  const double lq = std::log(static_cast<double>(p.q));
  const double la = bipartite_constants(p).log_a;
  const double lk = std::log(static_cast<double>(p.k));
  const double lf = log_factorial(p.k);
  double t1 = std::log(9.0) + la + 2 * lk - m * lq;
  double t2 = std::log(4.0) + 2 * la + 3 * lf - 2.0 * l * lq;
  double t3 = std::log(2.0) + 2 * la + 5 * lf - 4.0 * l * lq;
  double mx = std::max({t1, t2, t3});
  double lse = mx + std::log(std::exp(t1 - mx) + std::exp(t2 - mx) + std::exp(t3 - mx));
  return exp_or_inf(0.5 * lse);
}

double bound_swap_theorem(const ProtocolParams& p) {
  validate_params(p);
  const int m = p.parties[0].m, l = p.parties[0].ell;
  double e = scaled(static_cast<double>(p.k) * p.k, p.q, m);
  if (e >= 1.0) return kInf;
  const double lq = std::log(static_cast<double>(p.q));
  double la = -2.0 * std::log1p(-e);
  return exp_or_inf(std::log(3.0) + la + 1.5 * log_factorial(p.k) - l * lq);
}

double bound_crosstwirl(const ProtocolParams& p) {
  validate_params(p);
  for (const auto& c : crosstwirl_checks(p))
    if (!c.ok) return kInf;
  const int m = p.parties[0].m, l = p.parties[0].ell, k = p.k;
  const double lq = std::log(static_cast<double>(p.q));
  BoundConstants c = bipartite_constants(p);
  // q^(-4lk) k!^2 binom(q^2l+k-1,k)^2 etc., each written as a cancel product
  double t1 = c.log_a + c.log_c + c.log_g + 2.0 * log_cancel(2.0 * l * lq, k);
  double t2 = c.log_a + c.log_b + 2.0 * log_cancel(2.0 * m * lq, k);
  double t3 = c.log_a + c.log_b + 4.0 * log_cancel(m * lq, k);
  double sq = three_term(t1, t2, t3);
  return std::sqrt(std::max(sq, 0.0));
}

AngleReport bound_multi_crosstwirl(const ProtocolParams& p) {
  validate_params(p);
  AngleReport r;
  r.params = p;
  r.preconditions = multi_checks(p);
  r.constants = multipartite_constants(p);
  if (r.preconditions_met() && r.constants.finite) {
    const double lq = std::log(static_cast<double>(p.q));
    double s1 = 0, s2 = 0, s3 = 0;
    for (const auto& pt : p.parties) {
      s1 += log_cancel(2.0 * pt.ell * lq, p.k);
      s2 += log_cancel(2.0 * pt.m * lq, p.k);
      s3 += 2.0 * log_cancel(pt.m * lq, p.k);
    }
    const auto& c = r.constants;
    double sq = three_term(c.log_a + c.log_c + c.log_g + s1, c.log_a + c.log_b + s2, c.log_a + c.log_b + s3);
    r.analytic_bound = std::sqrt(std::max(sq, 0.0));
    r.analytic_bound_log = std::log(r.analytic_bound);
  }
  TpeBound t = tpe_bound_multict(p);
  if (t.preconditions_met()) r.tpe_bound = t.value;
  if (!t.raw_condition_as_printed)
    r.warnings.push_back("corollary condition K^2 sum q^(l_p) <= 1 as printed is unsatisfiable; evaluated with q^(-l_p)");
  return r;
}

TpeBound tpe_bound_multict(const ProtocolParams& p) {
  TpeBound t;
  const double k2 = static_cast<double>(p.k) * p.k;
  double s_neg = 0.0, s_neg2 = 0.0;
  BigInt s_pos = 0;
  bool three = true;
  for (const auto& pt : p.parties) {
    s_neg += scaled(1.0, p.q, pt.ell);
    s_neg2 += scaled(1.0, p.q, 2.0 * pt.ell);
    s_pos += ipow(BigInt(p.q), std::min(pt.ell, 4096));
    three = three && pt.m >= 3 * pt.ell;
  }
  t.value = 5.0 * p.k * std::sqrt(s_neg2);
  t.checks.push_back({"K^2 sum q^(-l_p) <= 1", k2 * s_neg <= 1.0});
  t.checks.push_back({"m_p >= 3 l_p", three});
  t.raw_condition_as_printed = BigInt(p.k) * p.k * s_pos <= 1;
  if (p.kind == ProtocolKind::multi_crosstwirl) {
    auto prop = multi_checks(p);
    t.checks.insert(t.checks.end(), prop.begin(), prop.end());
    if (t.preconditions_met()) {
      // evaluate the proposition bound directly to compare
      const double lq = std::log(static_cast<double>(p.q));
      BoundConstants c = multipartite_constants(p);
      double s1 = 0, s2 = 0, s3 = 0;
      for (const auto& pt : p.parties) {
        s1 += log_cancel(2.0 * pt.ell * lq, p.k);
        s2 += log_cancel(2.0 * pt.m * lq, p.k);
        s3 += 2.0 * log_cancel(pt.m * lq, p.k);
      }
      double sq = three_term(c.log_a + c.log_c + c.log_g + s1, c.log_a + c.log_b + s2, c.log_a + c.log_b + s3);
      t.dominates_prop = t.value >= std::sqrt(std::max(sq, 0.0)) - 1e-15;
    }
  }
  return t;
}

AngleReport analytic_report(const ProtocolParams& p) {
  validate_params(p, true);
  if (p.kind == ProtocolKind::multi_crosstwirl) return bound_multi_crosstwirl(p);
  AngleReport r;
  r.params = p;
  r.constants = bipartite_constants(p);
  if (p.kind == ProtocolKind::swap) {
    r.preconditions = swap_checks(p);
    r.analytic_bound = bound_swap(p);
    r.theorem_bound = bound_swap_theorem(p);
  } else {
    r.preconditions = crosstwirl_checks(p);
    if (r.preconditions_met()) r.analytic_bound = bound_crosstwirl(p);
  }
  r.analytic_bound_log = r.analytic_bound > 0 ? std::log(r.analytic_bound) : -kInf;
  return r;
}

AngleReport exact_angle(const ProtocolParams& p, const ExactOptions& opt) {
  AngleReport r = analytic_report(p);
  BigInt k = p.k;
  r.exact_checks.push_back({"k <= 5", p.k <= kMaxProtocolDegree});
  bool grams_ok = true;
  for (const auto& pt : p.parties) grams_ok = grams_ok && cmp_qpow(k, p.q, pt.m) <= 0;
  r.exact_checks.push_back({"k <= q^m_p for all p", grams_ok});
  if (p.kind != ProtocolKind::swap)
    r.exact_checks.push_back({"k <= q^L", cmp_qpow(k, p.q, p.total_ell()) <= 0});
  if (p.kind == ProtocolKind::crosstwirl && p.parties[0].ell >= p.parties[0].m)
    r.warnings.push_back("degenerate crosstwirl l = m");

  if (p.k > kMaxProtocolDegree) return r;
  std::size_t n1s = sym_group(p.k).order();
  if (ipow_sz(n1s, p.P()) > 14400) {
    r.warnings.push_back("tuple index k!^P exceeds 14400; exact solve skipped");
    return r;
  }
  bool gates = std::all_of(r.exact_checks.begin(), r.exact_checks.end(), [](const NamedCheck& c) { return c.ok; });
  if (!gates && !opt.allow_rank_deficient) {
    r.warnings.push_back("exact angle omitted: Gram invertibility preconditions fail");
    return r;
  }
  const bool pinv = !gates;

  Pencil pc = make_pencil(p);
  const double lq = std::log(static_cast<double>(p.q));
  SpdSolver gm(gram_matrix_log(p.k, p.total_m() * lq).entries, pinv, "G at q^M");
  std::unique_ptr<SpdSolver> gl;
  if (p.kind != ProtocolKind::swap)
    gl = std::make_unique<SpdSolver>(gram_matrix_log(p.k, p.total_ell() * lq).entries, pinv, "G at q^L");

  double lmax = 0.0, lmin = 0.0;
  if (pinv || (pc.n <= static_cast<Eigen::Index>(opt.dense_cap) && !opt.force_matrix_free)) {
    Eigen::MatrixXd B = kron_dense(pc.F);
    std::unique_ptr<SpdSolver> bs;
    if (p.kind == ProtocolKind::swap) bs = std::make_unique<SpdSolver>(B, pinv, "B");
    Eigen::MatrixXd A = dense_A(pc, gm, gl.get(), bs.get());
    Eigen::MatrixXd C;
    if (!pinv) {
      // whitening by the tensor product of per-party Cholesky factors
      std::vector<Eigen::MatrixXd> Ls;
      for (const auto& f : pc.F) Ls.push_back(Eigen::LLT<Eigen::MatrixXd>(f).matrixL());
      Eigen::MatrixXd L = kron_dense(Ls);
      Eigen::MatrixXd X = L.triangularView<Eigen::Lower>().solve(A);
      C = L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
      r.solver = "dense";
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
      const auto& ev = es.eigenvalues();
      double cut = 1e-10 * ev.maxCoeff();
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) keep.push_back(i);
      Eigen::MatrixXd W(pc.n, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j)
        W.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) / std::sqrt(ev(keep[j]));
      C = W.transpose() * A * W;
      r.solver = "pseudo-inverse";
      std::ostringstream os;
      os << "rank-deficient Gram pencil: B rank " << keep.size() << " of " << pc.n;
      r.warnings.push_back(os.str());
    }
    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("pencil eigensolve failed");
    lmin = es.eigenvalues()(0);
    lmax = es.eigenvalues()(es.eigenvalues().size() - 1);
  } else {
    std::vector<Eigen::MatrixXd> Ls;
    for (const auto& f : pc.F) {
      Eigen::LLT<Eigen::MatrixXd> llt(f);
      if (llt.info() != Eigen::Success) throw NumericError("party Gram not positive definite");
      Ls.push_back(llt.matrixL());
    }
    const Eigen::Index n1 = pc.n1;
    const int P = pc.P;
    auto solve_L = [&](Eigen::VectorXd& v) {
      apply_modes(v, n1, P, [&](int q, Eigen::Map<RowMat>& y) { y = Ls[q].triangularView<Eigen::Lower>().solve(y); });
    };
    auto solve_Lt = [&](Eigen::VectorXd& v) {
      apply_modes(v, n1, P,
                  [&](int q, Eigen::Map<RowMat>& y) { y = Ls[q].transpose().triangularView<Eigen::Upper>().solve(y); });
    };
    Eigen::MatrixXd U = tuple_table(pc.E);  // u_pi over tuples
    LinearOp op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
      Eigen::VectorXd x = v;
      solve_Lt(x);
      Eigen::VectorXd ax;
      if (p.kind == ProtocolKind::swap) {
        Eigen::VectorXd mx = apply_M(pc, x);
        solve_L(mx);
        solve_Lt(mx);
        ax = apply_M(pc, mx);
      } else {
        Eigen::MatrixXd Z(n1, pc.n);
        parallel_for(static_cast<std::size_t>(n1), [&](std::size_t w) {
          Eigen::VectorXd t = U.row(static_cast<Eigen::Index>(w)).transpose().cwiseProduct(x);
          apply_modes(t, n1, P, [&](int q, Eigen::Map<RowMat>& y) { y = pc.H[q] * y; });
          Z.row(static_cast<Eigen::Index>(w)) = t.transpose();
        });
        Eigen::MatrixXd Zs = gl->solve(Z);
        ax = U.cwiseProduct(Zs).colwise().sum().transpose();
      }
      Eigen::VectorXd nx = apply_tuple(pc.F, x);
      ax -= apply_tuple_t(pc.F, gm.solve(nx), pc.n);
      solve_L(ax);
      out = ax;
    };
    LanczosOptions lo;
    lo.tol = opt.lanczos_tol;
    lo.max_iter = 600;
    LanczosResult lr = lanczos_extremal(op, pc.n, lo);
    if (!lr.converged) {
      std::ostringstream os;
      os << "Lanczos did not converge; Ritz estimate " << lr.lambda_max << " residual " << lr.residual_max;
      throw NumericError(os.str());
    }
    lmax = lr.lambda_max;
    lmin = lr.lambda_min;
    r.solver = "lanczos";
  }

  r.pencil_lambda_min = lmin;
  // eigenvalues of the whitened pencil lie in [0, 1]
  if (lmin < -1e-10) {
    std::ostringstream os;
    os << "pencil has negative eigenvalue " << lmin << " beyond clamp threshold";
    throw NumericError(os.str());
  }
  if (lmax > 1.0 + 1e-8) {
    std::ostringstream os;
    os << "pencil eigenvalue " << lmax << " exceeds 1";
    throw NumericError(os.str());
  }
  r.exact_angle = std::sqrt(std::clamp(lmax, 0.0, 1.0));
  return r;
}

// ---- open question matrices

Eigen::MatrixXd build_X(const ProtocolParams& p) {
  validate_params(p);
  if (p.kind != ProtocolKind::swap) throw DomainError("X is defined for swap parameters");
  check_cap(p);
  Pencil pc = make_pencil(p);
  BoundConstants c = bipartite_constants(p);
  Eigen::MatrixXd M = dense_M(pc);
  Eigen::MatrixXd N = tuple_table(pc.F);
  Eigen::MatrixXd X = c.a * (M * M) - c.b * (N.transpose() * N);
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd build_Y(const ProtocolParams& p) {
  validate_params(p, true);
  if (p.kind == ProtocolKind::swap) throw DomainError("Y is defined for crosstwirl parameters");
  check_cap(p);
  BoundConstants c = p.kind == ProtocolKind::crosstwirl ? bipartite_constants(p) : multipartite_constants(p);
  Eigen::MatrixXd N = build_N(p), Nl = build_N_ell(p);
  Eigen::MatrixXd NN = N.transpose() * N;
  Eigen::VectorXd dl = Nl.colwise().squaredNorm().transpose();
  Eigen::MatrixXd Y = -c.b * NN;
  Y.diagonal() += c.c * c.g * dl;
  return Y;
}

namespace {
double spectral_norm_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("eigensolve failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}
}  // namespace

OpenNorms open_question_norms(const ProtocolParams& p) {
  OpenNorms o;
  if (p.kind == ProtocolKind::swap) {
    o.constants = bipartite_constants(p);
    o.normX = spectral_norm_sym(build_X(p));
    return o;
  }
  o.constants = p.kind == ProtocolKind::crosstwirl ? bipartite_constants(p) : multipartite_constants(p);
  Eigen::MatrixXd Y = build_Y(p);
  o.normY = spectral_norm_sym(Y);
  Eigen::MatrixXd K = -Y;
  K.diagonal().setZero();
  o.normD = Y.diagonal().cwiseAbs().maxCoeff();
  o.normK = spectral_norm_sym(K);
  return o;
}

}  // namespace dforge
