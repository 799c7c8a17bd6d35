#include "designforge/gram.hpp"

#include "designforge/symgroup.hpp"

#include <iomanip>
#include <ostream>

namespace dforge {

GramMatrix gram_matrix(int k, double dim) {
  if (!(dim >= 1.0)) throw DomainError("Gram dimension must be >= 1");
  return gram_matrix_log(k, std::log(dim));
}

GramMatrix gram_matrix_log(int k, double log_dim) {
  if (k < 1 || k > kMaxDegree) throw CapacityError("degree must be in 1..8");
  if (k == kMaxDegree) throw CapacityError("dense Gram matrix for k = 8 exceeds memory cap");
  const SymGroup& g = sym_group(k);
  const auto n = static_cast<Eigen::Index>(g.order());
  GramMatrix out;
  out.k = k;
  out.log_dim = log_dim;
  out.entries.resize(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (Eigen::Index j = 0; j < n; ++j)
      out.entries(static_cast<Eigen::Index>(i), j) =
          gram_entry(g.quotient_cycles(i, static_cast<std::size_t>(j)), k, log_dim);
  });
  return out;
}

std::pair<double, double> gram_extremal_eigs(const GramMatrix& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("Gram eigensolver failed");
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

BigInt cycle_sum(int k, const BigInt& dim) {
  // count permutations by cycle number, then sum dim^c
  const SymGroup& g = sym_group(k);
  std::vector<BigInt> count(k + 1, 0);
  for (std::size_t r = 0; r < g.order(); ++r) count[g.cycles(r)] += 1;
  BigInt s = 0;
  for (int c = 1; c <= k; ++c) s += count[c] * ipow(dim, c);
  return s;
}

CancelBounds cancel_bounds(int k, int q, int m) {
  if (k < 1 || k > kMaxDegree) throw CapacityError("degree must be in 1..8");
  if (q < 2 || m < 0) throw DomainError("need q >= 2, m >= 0");
  BigInt qm = ipow(BigInt(q), m);
  // q^(-mk) k! binom(q^m+k-1,k) = prod_{j<k} (1 + j/q^m)
  BigRat value = 1;
  for (int j = 0; j < k; ++j) value *= BigRat(qm + j, qm);
  BigRat lower = 1 + BigRat(BigInt(k) * (k - 1), 2 * qm);
  if (value < lower) throw ConsistencyError("cancel sandwich: lower bound violated");

  double log_qm = static_cast<double>(m) * std::log(static_cast<double>(q));
  double log_value = 0.0;
  for (int j = 0; j < k; ++j) log_value += std::log1p(j * std::exp(-log_qm));
  double upper_exp = k * (k - 1) / 2.0 * std::exp(-log_qm);
  if (log_value > upper_exp * (1.0 + 1e-12) + 1e-300)
    throw ConsistencyError("cancel sandwich: upper bound violated");

  CancelBounds out;
  out.lower = to_double(lower);
  out.value = to_double(value);
  out.upper = std::exp(upper_exp);
  return out;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  os << "row";
  for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << j;
  os << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << i;
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << m(i, j);
    os << '\n';
  }
}

}  // namespace dforge
