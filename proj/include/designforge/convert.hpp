#pragma once

#include "designforge/angle.hpp"
#include "designforge/common.hpp"
#include "designforge/symgroup.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dforge {

// Bounds on the complete index of the local twirl algebra over a subalgebra.
// All values are natural logs.
struct IndexBound {
  std::vector<double> log_dims;
  int k = 1;
  double log_coarse = 0.0;          // k!^r prod min{(1 - k^2/|A|)^-1, |A|^k / k!}
  double log_proof_display = 0.0;   // prod min{k! (1 - k^2/|A|)^-1, |A|^(2k)}
  double log_convert_form = 0.0;    // k!^r prod min{(1 - k^2/|A|)^-1, |A|^(2k) / k!}
  std::optional<double> log_exact;  // |A|^k max over blocks of d_lambda / m_lambda
};

IndexBound cb_index_bound(const std::vector<double>& log_dims, int k);

// d^k d_lambda / k! (1 - k^2/d), exact.
BigRat minmult_floor(const Partition& lam, long d);

struct ConversionReport {
  double gamma = 0.0;
  IndexBound index;
  bool used_exact_index = false;
  double epsilon = kInf;
  double log_epsilon = kInf;
  bool valid = false;
  std::optional<int> n_required;
};

ConversionReport tpe_to_relative(double gamma, const IndexBound& idx, bool use_exact_index = false);

struct SwapEllReport {
  int ell = 0;             // theorem inequality
  int ell_proof_path = 0;  // tighter constants carried through the proof
  double rhs = 0.0;
  double rhs_proof_path = 0.0;
  bool feasible = false;   // ell <= m/2
  bool feasible_proof_path = false;
};

// Smallest ell meeting the twirl-swap-twirl relative error condition.
// Throws DomainError unless k^2 < 2q^m and k^2 < q^m.
SwapEllReport swap_design_ell(int k, int q, int m, double eps);

struct CrosstwirlEpsReport {
  double epsilon = kInf;
  double log_epsilon = kInf;
  double proof_path = kInf;
  double log_proof_path = kInf;
  bool valid = false;
  std::vector<NamedCheck> checks;
  std::vector<int> comm_qudits;     // per party
  std::vector<double> comm_ebits;   // per party
  std::string comm_statement;
  bool preconditions_met() const;
};

CrosstwirlEpsReport crosstwirl_design_eps(const ProtocolParams& p);

// (1 + base) prod (1 + e_n) - 1, accumulated as log1p terms.
double compose_errors(const std::vector<double>& eps, double base_eps = 0.0);

}  // namespace dforge
