#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace dforge {

using LinearOp = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

struct LanczosOptions {
  double tol = 1e-12;     // residual bound relative to the spectral scale
  int max_iter = 400;
  std::uint64_t seed = 0x5eedULL;
};

struct LanczosResult {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double residual_max = 0.0;  // |beta_j * s_j| for the top Ritz pair
  int iterations = 0;
  bool converged = false;
  bool exhausted = false;  // Krylov space became invariant
};

// Extremal eigenvalues of a symmetric operator. Full reorthogonalization.
LanczosResult lanczos_extremal(const LinearOp& op, Eigen::Index n, const LanczosOptions& opt = {});

}  // namespace dforge
