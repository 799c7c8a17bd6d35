#pragma once

#include "designforge/angle.hpp"
#include "designforge/common.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace dforge {

using cplx = std::complex<double>;

// Sites of one copy with their local dimensions; the global space is k copies,
// copy 0 most significant, site 0 most significant within a copy.
struct SiteSpace {
  std::vector<int> dims;
  int k = 1;
  std::size_t copy_dim() const;
  std::size_t dim() const;
};

struct TwirlSpec {
  std::vector<int> support;  // site indices
};

// Exchanges the listed site pairs inside every copy.
struct SwapSpec {
  std::vector<std::pair<int, int>> pairs;
};

struct Layer {
  bool is_swap = false;
  TwirlSpec twirl;
  SwapSpec swap;
};

struct ProtocolChannel {
  SiteSpace space;
  std::vector<Layer> layers;  // applied first to last
  std::size_t dim() const { return space.dim(); }
};

ProtocolChannel twirl_channel(const SiteSpace& s, std::vector<std::vector<int>> supports);
ProtocolChannel swap_channel(const SiteSpace& s, SwapSpec sw);
// a then b
ProtocolChannel then(const ProtocolChannel& a, const ProtocolChannel& b);
ProtocolChannel power(const ProtocolChannel& a, int n);
ProtocolChannel adjoint(const ProtocolChannel& c);

// Channels of the two-party and multipartite protocols on the tiny space.
struct ProtocolChannels {
  SiteSpace space;
  std::vector<std::vector<int>> blocks;  // party sites
  ProtocolChannel P, Q, R, swap;         // swap is empty for crosstwirls
};
ProtocolChannels protocol_channels(const ProtocolParams& p);

class TwirlOp {
 public:
  TwirlOp(const SiteSpace& s, const TwirlSpec& t);
  template <class Mat>
  Mat apply(const Mat& x) const;
  int gram_rank() const { return rank_; }
  std::size_t support_dim() const { return ds_; }

 private:
  int k_ = 1;
  std::size_t ds_ = 1, dsk_ = 1, dc_ = 1;
  std::vector<std::uint32_t> glob_;               // (sidx * dc + cidx) -> global
  std::vector<std::vector<std::uint32_t>> perm_;  // perm_[sigma][sidx]
  Eigen::MatrixXd ginv_;                          // pseudo-inverse of tr(s^T t)
  int rank_ = 0;
};

Eigen::MatrixXd exact_twirl_apply(const SiteSpace& s, const TwirlSpec& t, const Eigen::MatrixXd& x);
Eigen::MatrixXcd exact_twirl_apply(const SiteSpace& s, const TwirlSpec& t, const Eigen::MatrixXcd& x);

// Compiled channel for repeated application.
class ChannelOp {
 public:
  explicit ChannelOp(const ProtocolChannel& c);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;
  std::size_t dim() const { return dim_; }
  ChannelOp adjoint() const;

 private:
  ChannelOp() = default;
  template <class Mat>
  Mat run(const Mat& x) const;
  std::size_t dim_ = 0;
  std::vector<int> kind_;  // 0 twirl, 1 swap
  std::vector<std::shared_ptr<const TwirlOp>> twirls_;
  std::vector<std::shared_ptr<const std::vector<std::uint32_t>>> swaps_;
  std::vector<std::size_t> slot_;
};

// Global basis permutation of a swap layer; an involution.
std::vector<std::uint32_t> swap_permutation(const SiteSpace& s, const SwapSpec& sw);

struct NormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Spectral norm of proto - ref on Hilbert-Schmidt space.
NormResult norm_2to2_diff(const ProtocolChannel& proto, const ProtocolChannel& ref, double tol = 1e-11,
                          std::uint64_t seed = 0x0a11ceULL);

struct RelativeErrorReport {
  double eps_plus = 0.0;
  double eps_minus = 0.0;
  bool support_ok = false;
  double outside_weight = 0.0;
  int support_rank = 0;
  double epsilon() const { return std::max(eps_plus, eps_minus); }
};

Eigen::MatrixXd choi_matrix(const ProtocolChannel& c);
RelativeErrorReport choi_relative_error(const ProtocolChannel& proto, const ProtocolChannel& ref);

// Same quantity for channels that begin and end inside the span of
// per-block permutation operators. Works in the regular representation of
// the block permutation group, so the global dimension may exceed 64.
RelativeErrorReport choi_relative_error_commutant(const ProtocolChannel& proto, const ProtocolChannel& ref,
                                                  const std::vector<std::vector<int>>& blocks,
                                                  std::uint64_t seed = 0xb10cULL);

// Dense products of per-block permutation operators, tuple order as in the
// angle module.
std::vector<Eigen::MatrixXd> block_permutation_operators(const SiteSpace& s,
                                                         const std::vector<std::vector<int>>& blocks);

// Relative error of J_proto against J_ref given as matrices.
RelativeErrorReport relative_error_from_choi(const Eigen::MatrixXd& jp, const Eigen::MatrixXd& jr);

// Haar sampling
Eigen::MatrixXcd haar_unitary(int d, std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

class SampledChannel {
 public:
  SampledChannel(const ProtocolChannel& c, int n_samples, std::uint64_t seed);
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;
  Eigen::MatrixXcd choi() const;
  // Choi matrix of the channel that uses only sample i in every twirl layer.
  Eigen::MatrixXcd sample_choi(int i) const;
  int samples() const { return n_; }
  std::size_t dim() const { return space_.dim(); }

 private:
  Eigen::MatrixXcd apply_sample_range(const Eigen::MatrixXcd& x, int lo, int hi) const;
  SiteSpace space_;
  std::vector<Layer> layers_;
  int n_;
  std::vector<std::vector<Eigen::MatrixXcd>> globals_;  // per twirl layer, per sample
  std::vector<std::vector<std::uint32_t>> swaps_;
};

SampledChannel haar_sample_channel(const ProtocolChannel& c, int n_samples, std::uint64_t seed);

Eigen::MatrixXcd choi_matrix_complex(const ProtocolChannel& c);

// ||(QP)^n - R|| for n = 1..n_max.
std::vector<double> alternating_norms(const ProtocolChannels& ch, int n_max, double tol = 1e-11);

}  // namespace dforge
