#pragma once

#include "designforge/common.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace dforge {

enum class ProtocolKind { swap, crosstwirl, multi_crosstwirl };

std::string kind_name(ProtocolKind k);
ProtocolKind parse_kind(const std::string& s);

struct Party {
  int m = 1;    // block qudits
  int ell = 0;  // swapped / crosstwirled qudits
};

struct ProtocolParams {
  int q = 2;
  int k = 1;
  std::vector<Party> parties;
  ProtocolKind kind = ProtocolKind::crosstwirl;

  int P() const { return static_cast<int>(parties.size()); }
  int total_m() const;
  int total_ell() const;
};

ProtocolParams swap_params(int q, int k, int m, int ell);
ProtocolParams crosstwirl_params(int q, int k, int m, int ell);
ProtocolParams multi_params(int q, int k, std::vector<Party> parties);

// Structural invariants of the protocol kind. Throws DomainError.
// allow_degenerate admits the crosstwirl limit ell == m.
void validate_params(const ProtocolParams& p, bool allow_degenerate = false);

struct BoundConstants {
  double a = 1, b = 1, c = 1, g = 1;
  double log_a = 0, log_b = 0, log_c = 0, log_g = 0;
  bool finite = true;
};

struct NamedCheck {
  std::string name;
  bool ok = false;
};

struct AngleReport {
  ProtocolParams params;
  std::optional<double> exact_angle;
  std::optional<double> pencil_lambda_min;  // raw, before clamping
  std::string solver;                       // dense | lanczos | pseudo-inverse
  double analytic_bound = kInf;
  double analytic_bound_log = kInf;  // ln of analytic_bound
  BoundConstants constants;
  std::vector<NamedCheck> preconditions;  // gate the analytic bound
  std::vector<NamedCheck> exact_checks;   // gate the exact solve
  std::optional<double> tpe_bound;
  std::optional<double> theorem_bound;  // swap: looser constant path
  std::vector<std::string> warnings;

  bool preconditions_met() const;
};

// Cap for dense protocol matrices: k!^2 <= 14400.
inline constexpr int kMaxProtocolDegree = 5;

// Per-party factor tables and the protocol matrices. Tuple index of
// (s_1..s_P) is sum_p rank(s_p) * k!^(P-1-p).
Eigen::MatrixXd build_M(const ProtocolParams& p);
Eigen::MatrixXd build_N(const ProtocolParams& p);
Eigen::MatrixXd build_N_ell(const ProtocolParams& p);

struct ExactOptions {
  bool allow_rank_deficient = false;  // pseudo-inverse on singular Grams
  bool force_matrix_free = false;
  std::size_t dense_cap = 2000;
  double lanczos_tol = 1e-13;
};

BoundConstants bipartite_constants(const ProtocolParams& p);
BoundConstants multipartite_constants(const ProtocolParams& p);

AngleReport exact_angle(const ProtocolParams& p, const ExactOptions& opt = {});

double bound_swap(const ProtocolParams& p);
// 3 a' k!^(3/2) q^-ell with a' = (1 - k^2/q^m)^-2
double bound_swap_theorem(const ProtocolParams& p);
double bound_crosstwirl(const ProtocolParams& p);
AngleReport bound_multi_crosstwirl(const ProtocolParams& p);
// Bound report for any kind without the exact solve.
AngleReport analytic_report(const ProtocolParams& p);

struct TpeBound {
  double value = kInf;
  std::vector<NamedCheck> checks;
  bool raw_condition_as_printed = false;  // K^2 sum q^(+l_p) <= 1
  std::optional<bool> dominates_prop;     // value >= Prop bound when both apply
  bool preconditions_met() const;
};
TpeBound tpe_bound_multict(const ProtocolParams& p);

struct OpenNorms {
  std::optional<double> normX;
  std::optional<double> normY;
  std::optional<double> normD;
  std::optional<double> normK;
  BoundConstants constants;
};
// X for swap params, Y (with its diagonal / off-diagonal split) otherwise.
OpenNorms open_question_norms(const ProtocolParams& p);
Eigen::MatrixXd build_X(const ProtocolParams& p);
Eigen::MatrixXd build_Y(const ProtocolParams& p);

}  // namespace dforge
