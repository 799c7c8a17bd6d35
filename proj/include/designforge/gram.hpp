#pragma once

#include "designforge/common.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <utility>

namespace dforge {

// Normalized Frobenius Gram matrix of the k! permutation operators on k copies
// of a space of dimension dim.
struct GramMatrix {
  int k = 1;
  double log_dim = 0.0;
  Eigen::MatrixXd entries;
  double dim() const { return std::exp(log_dim); }
};

GramMatrix gram_matrix(int k, double dim);
GramMatrix gram_matrix_log(int k, double log_dim);

// Single entry dim^(c - k) from a cycle count, computed in the log domain.
inline double gram_entry(int cycles, int k, double log_dim) {
  return std::exp(static_cast<double>(cycles - k) * log_dim);
}

std::pair<double, double> gram_extremal_eigs(const GramMatrix& g);

// Sum over S_k of dim^c(w).
BigInt cycle_sum(int k, const BigInt& dim);

struct CancelBounds {
  double lower = 1.0;
  double value = 1.0;
  double upper = 1.0;
};
// q^(-mk) k! binom(q^m + k - 1, k) and its two elementary bounds.
CancelBounds cancel_bounds(int k, int q, int m);

// CSV with a header row of permutation (or tuple) ranks.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace dforge
