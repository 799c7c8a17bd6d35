#include "designforge/convert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dforge {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -kInf;
  double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// ln((1 - x)^-1) for x = exp(log_x); +inf once x >= 1.
double log_inv_one_minus(double log_x) {
  if (log_x >= 0.0) return kInf;
  return -std::log1p(-std::exp(log_x));
}

// per-party max of ln(d_lambda / m_lambda) over Schur-Weyl blocks
double log_block_ratio_max(int k, long d) {
  double best = -kInf;
  for (const auto& lam : partitions(k, static_cast<int>(std::min<long>(d, k)))) {
    BigRat r(sym_irrep_dim(lam), unitary_irrep_dim(lam, d));
    double v = log_big(boost::multiprecision::numerator(r)) - log_big(boost::multiprecision::denominator(r));
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

IndexBound cb_index_bound(const std::vector<double>& log_dims, int k) {
  if (log_dims.empty()) throw DomainError("index bound needs at least one subsystem");
  if (k < 1) throw DomainError("k must be positive");
  IndexBound b;
  b.log_dims = log_dims;
  b.k = k;
  const double lkf = log_factorial(k);
  const double lk2 = 2.0 * std::log(static_cast<double>(k));
  const double r = static_cast<double>(log_dims.size());
  b.log_coarse = r * lkf;
  b.log_convert_form = r * lkf;
  b.log_proof_display = 0.0;
  bool exact_ok = k <= 6;
  double exact = 0.0;
  for (double ld : log_dims) {
    if (!(ld >= 0.0)) throw DomainError("subsystem dimension must be at least 1");
    double first = log_inv_one_minus(lk2 - ld);
    b.log_coarse += std::min(first, k * ld - lkf);
    b.log_convert_form += std::min(first, 2.0 * k * ld - lkf);
    b.log_proof_display += std::min(lkf + first, 2.0 * k * ld);
    double dv = std::exp(ld);
    long di = std::lround(dv);
    if (dv > 4096.5 || std::abs(dv - static_cast<double>(di)) > 1e-9 * dv) {
      exact_ok = false;
    } else if (exact_ok) {
      exact += k * std::log(static_cast<double>(di)) + log_block_ratio_max(k, di);
    }
  }
  if (exact_ok) b.log_exact = exact;
  return b;
}

BigRat minmult_floor(const Partition& lam, long d) {
  if (d < 1) throw DomainError("dimension must be positive");
  BigInt dk = ipow(BigInt(d), lam.k);
  BigRat f(dk * sym_irrep_dim(lam), factorial(lam.k));
  return f * (BigRat(1) - BigRat(BigInt(lam.k) * lam.k, BigInt(d)));
}

ConversionReport tpe_to_relative(double gamma, const IndexBound& idx, bool use_exact_index) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be non-negative");
  ConversionReport c;
  c.gamma = gamma;
  c.index = idx;
  double log_c = idx.log_coarse;
  if (use_exact_index) {
    if (!idx.log_exact) throw DomainError("exact index not available");
    log_c = *idx.log_exact;
    c.used_exact_index = true;
  }
  if (gamma == 0.0) {
    c.epsilon = 0.0;
    c.log_epsilon = -kInf;
    c.valid = true;
    c.n_required = 1;
    return c;
  }
  c.log_epsilon = std::log(gamma) + log_c;
  c.epsilon = exp_or_inf(c.log_epsilon);
  c.valid = c.epsilon < 1.0;
  if (gamma < 1.0) {
    double n = log_c / -std::log(gamma);
    c.n_required = std::max(1, static_cast<int>(std::ceil(n - 1e-12)));
  }
  return c;
}

SwapEllReport swap_design_ell(int k, int q, int m, double eps) {
  if (k < 1 || q < 2 || m < 1) throw DomainError("need k >= 1, q >= 2, m >= 1");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  BigInt k2 = BigInt(k) * k, qm = ipow(BigInt(q), m);
  if (!(k2 < 2 * qm)) throw DomainError("k^2 < 2q^m violated");
  if (!(k2 < qm)) throw DomainError("k^2 < q^m violated: log(1 - k^2/q^m) undefined");
  const double lq = std::log(static_cast<double>(q));
  const double ratio = to_double(BigRat(k2, qm));
  const double lkf = log_factorial(k);
  SwapEllReport r;
  r.rhs = (3.5 * lkf - std::log(eps) - 4.0 * std::log1p(-ratio) + std::log(4.0)) / lq;
  r.rhs_proof_path =
      (std::log(3.0) + 3.5 * lkf - std::log(eps) - 2.0 * std::log1p(-0.5 * ratio) - 2.0 * std::log1p(-ratio)) / lq;
  auto smallest = [](double rhs) { return std::max(0, static_cast<int>(std::ceil(rhs - 1e-12))); };
  r.ell = smallest(r.rhs);
  r.ell_proof_path = smallest(r.rhs_proof_path);
  r.feasible = 2 * r.ell <= m;
  r.feasible_proof_path = 2 * r.ell_proof_path <= m;
  return r;
}

bool CrosstwirlEpsReport::preconditions_met() const {
  return std::all_of(checks.begin(), checks.end(), [](const NamedCheck& c) { return c.ok; });
}

CrosstwirlEpsReport crosstwirl_design_eps(const ProtocolParams& p) {
  if (p.parties.empty() || p.k < 1 || p.q < 2) throw DomainError("bad crosstwirl parameters");
  for (const auto& pt : p.parties)
    if (pt.ell < 1 || pt.m < pt.ell) throw DomainError("need 1 <= l_p <= m_p");
  CrosstwirlEpsReport r;
  const double lq = std::log(static_cast<double>(p.q));
  const double K = p.k, P = p.P();
  const double lkf = log_factorial(p.k);
  std::vector<double> l1, l2;
  bool three = true;
  for (const auto& pt : p.parties) {
    l1.push_back(-pt.ell * lq);
    l2.push_back(-2.0 * pt.ell * lq);
    three = three && pt.m >= 3 * pt.ell;
  }
  double log_s1 = log_sum_exp(l1), log_s2 = log_sum_exp(l2);
  r.checks.push_back({"4K^2 sum q^(-l_p) <= 1", std::log(4.0 * K * K) + log_s1 <= 0.0});
  r.checks.push_back({"m_p >= 3 l_p", three});
  double base = 2.0 * P * lkf + std::log(K) + 0.5 * log_s2;
  r.log_epsilon = std::log(25.0) + base;
  r.epsilon = exp_or_inf(r.log_epsilon);
  double extra = 0.0;
  for (const auto& pt : p.parties) {
    extra += log_inv_one_minus(2.0 * std::log(K) + (pt.ell - pt.m) * lq);
    extra += log_inv_one_minus(2.0 * std::log(K) - pt.ell * lq);
  }
  r.log_proof_path = std::log(5.0) + base + extra;
  r.proof_path = exp_or_inf(r.log_proof_path);
  r.valid = r.epsilon < 1.0;
  std::ostringstream os;
  for (std::size_t i = 0; i < p.parties.size(); ++i) {
    int qd = 2 * p.parties[i].ell;
    r.comm_qudits.push_back(qd);
    r.comm_ebits.push_back(qd * std::log2(static_cast<double>(p.q)));
    if (i) os << "; ";
    os << "party " << i << ": at most " << qd << " qudits of quantum communication, " << r.comm_ebits.back()
       << " ebits";
  }
  r.comm_statement = os.str();
  return r;
}

double compose_errors(const std::vector<double>& eps, double base_eps) {
  if (!(base_eps >= 0.0)) throw DomainError("base error must be non-negative");
  // Neumaier summation of the log1p terms
  double sum = std::log1p(base_eps), comp = 0.0;
  for (double e : eps) {
    if (!(e >= 0.0)) throw DomainError("errors must be non-negative");
    double t = std::log1p(e);
    double s = sum + t;
    if (std::abs(sum) >= std::abs(t))
      comp += (sum - s) + t;
    else
      comp += (t - s) + sum;
    sum = s;
  }
  return std::expm1(sum + comp);
}

}  // namespace dforge
