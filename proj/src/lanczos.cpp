#include "designforge/lanczos.hpp"

#include "designforge/common.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dforge {

LanczosResult lanczos_extremal(const LinearOp& op, Eigen::Index n, const LanczosOptions& opt) {
  LanczosResult res;
  if (n <= 0) return res;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
  v.normalize();

  int cap = static_cast<int>(std::min<Eigen::Index>(n, opt.max_iter));
  Eigen::MatrixXd basis(n, std::min(cap + 1, 16));
  basis.col(0) = v;
  std::vector<double> alpha, beta;
  Eigen::VectorXd w(n);
  double scale = 0.0;

  for (int j = 0; j < cap; ++j) {
    op(basis.col(j), w);
    double a = basis.col(j).dot(w);
    alpha.push_back(a);
    // two passes of classical Gram-Schmidt against the whole basis
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd coef = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * coef;
    }
    double b = w.norm();
    scale = std::max(scale, std::abs(a) + b);

    int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw NumericError("tridiagonal eigensolve failed");
    res.lambda_min = es.eigenvalues()(0);
    res.lambda_max = es.eigenvalues()(m - 1);
    res.residual_max = b * std::abs(es.eigenvectors()(m - 1, m - 1));
    double res_min = b * std::abs(es.eigenvectors()(m - 1, 0));
    res.iterations = m;

    double thresh = opt.tol * std::max(scale, 1e-300);
    if (b <= thresh || m == n) {
      res.exhausted = true;
      res.converged = true;
      return res;
    }
    if (res.residual_max <= thresh && res_min <= thresh && m >= 3) {
      res.converged = true;
      return res;
    }
    beta.push_back(b);
    if (basis.cols() < j + 2)
      basis.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(cap + 1, 2 * basis.cols()));
    basis.col(j + 1) = w / b;
  }
  return res;
}

}  // namespace dforge
