#include "designforge/oracle.hpp"

#include "designforge/lanczos.hpp"
#include "designforge/symgroup.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace dforge {

namespace {

constexpr std::size_t kMaxGlobalDim = 4096;
constexpr std::size_t kMaxChoiDim = 64;
constexpr int kSampleBlock = 64;

struct Digits {
  std::vector<std::size_t> site_stride;  // within a copy
  std::vector<std::size_t> copy_stride;
};

Digits digits_of(const SiteSpace& s) {
  Digits d;
  int n = static_cast<int>(s.dims.size());
  d.site_stride.assign(n, 1);
  for (int i = n - 2; i >= 0; --i) d.site_stride[i] = d.site_stride[i + 1] * s.dims[i + 1];
  std::size_t cd = s.copy_dim();
  d.copy_stride.assign(s.k, 1);
  for (int c = s.k - 2; c >= 0; --c) d.copy_stride[c] = d.copy_stride[c + 1] * cd;
  return d;
}

int digit(const SiteSpace& s, const Digits& d, std::size_t x, int copy, int site) {
  std::size_t cidx = (x / d.copy_stride[copy]) % s.copy_dim();
  return static_cast<int>((cidx / d.site_stride[site]) % s.dims[site]);
}

void check_space(const SiteSpace& s) {
  if (s.dims.empty() || s.k < 1) throw DomainError("empty site space");
  for (int v : s.dims)
    if (v < 1) throw DomainError("local dimension must be positive");
  if (s.k > 3) throw CapacityError("oracle supports k <= 3");
  if (s.dim() > kMaxGlobalDim) throw CapacityError("global dimension exceeds 4096");
}

// Moore-Penrose inverse of a symmetric PSD matrix with its numerical rank.
Eigen::MatrixXd sym_pinv(const Eigen::MatrixXd& a, int& rank) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const auto& ev = es.eigenvalues();
  double cut = tol::projector * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) {
      inv(i) = 1.0 / ev(i);
      ++rank;
    }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::size_t SiteSpace::copy_dim() const {
  std::size_t d = 1;
  for (int v : dims) d *= static_cast<std::size_t>(v);
  return d;
}

std::size_t SiteSpace::dim() const {
  std::size_t d = 1, cd = copy_dim();
  for (int c = 0; c < k; ++c) d *= cd;
  return d;
}

ProtocolChannel twirl_channel(const SiteSpace& s, std::vector<std::vector<int>> supports) {
  ProtocolChannel c{s, {}};
  for (auto& sup : supports) {
    Layer l;
    l.twirl.support = std::move(sup);
    c.layers.push_back(std::move(l));
  }
  return c;
}

ProtocolChannel swap_channel(const SiteSpace& s, SwapSpec sw) {
  Layer l;
  l.is_swap = true;
  l.swap = std::move(sw);
  return ProtocolChannel{s, {l}};
}

ProtocolChannel then(const ProtocolChannel& a, const ProtocolChannel& b) {
  if (a.space.dims != b.space.dims || a.space.k != b.space.k) throw DomainError("channels act on different spaces");
  ProtocolChannel c = a;
  c.layers.insert(c.layers.end(), b.layers.begin(), b.layers.end());
  return c;
}

ProtocolChannel power(const ProtocolChannel& a, int n) {
  if (n < 0) throw DomainError("negative channel power");
  ProtocolChannel c{a.space, {}};
  for (int i = 0; i < n; ++i) c.layers.insert(c.layers.end(), a.layers.begin(), a.layers.end());
  return c;
}

ProtocolChannel adjoint(const ProtocolChannel& c) {
  ProtocolChannel r = c;
  std::reverse(r.layers.begin(), r.layers.end());
  return r;
}

ProtocolChannels protocol_channels(const ProtocolParams& p) {
  validate_params(p, true);
  ProtocolChannels ch;
  ch.space.k = p.k;
  std::vector<int> all, cross;
  int off = 0;
  for (const auto& party : p.parties) {
    std::vector<int> blk;
    for (int j = 0; j < party.m; ++j) {
      ch.space.dims.push_back(p.q);
      blk.push_back(off + j);
      all.push_back(off + j);
      if (j < party.ell) cross.push_back(off + j);
    }
    ch.blocks.push_back(blk);
    off += party.m;
  }
  check_space(ch.space);
  ch.P = twirl_channel(ch.space, ch.blocks);
  ch.R = twirl_channel(ch.space, {all});
  if (p.kind == ProtocolKind::swap) {
    SwapSpec sw;
    int m = p.parties[0].m;
    for (int j = 0; j < p.parties[0].ell; ++j) sw.pairs.push_back({j, m + j});
    ch.swap = swap_channel(ch.space, sw);
    ch.Q = then(then(ch.swap, ch.P), ch.swap);
  } else {
    ch.swap = ProtocolChannel{ch.space, {}};
    ch.Q = twirl_channel(ch.space, {cross});
  }
  return ch;
}

TwirlOp::TwirlOp(const SiteSpace& s, const TwirlSpec& t) : k_(s.k) {
  check_space(s);
  std::vector<int> sup = t.support;
  std::sort(sup.begin(), sup.end());
  if (sup.empty()) throw DomainError("twirl support is empty");
  if (std::adjacent_find(sup.begin(), sup.end()) != sup.end()) throw DomainError("twirl support repeats a site");
  int nsites = static_cast<int>(s.dims.size());
  if (sup.front() < 0 || sup.back() >= nsites) throw DomainError("twirl support out of range");
  std::vector<char> in(nsites, 0);
  for (int v : sup) in[v] = 1;
  std::vector<int> comp;
  for (int i = 0; i < nsites; ++i)
    if (!in[i]) comp.push_back(i);

  for (int v : sup) ds_ *= s.dims[v];
  if (ds_ < 2) throw DomainError("twirl support dimension must be at least 2");
  std::size_t dcc = s.copy_dim() / ds_;
  dsk_ = dc_ = 1;
  for (int c = 0; c < k_; ++c) {
    dsk_ *= ds_;
    dc_ *= dcc;
  }

  Digits dg = digits_of(s);
  std::size_t D = s.dim();
  glob_.assign(D, 0);
  for (std::size_t x = 0; x < D; ++x) {
    std::size_t si = 0, ci = 0;
    for (int c = 0; c < k_; ++c) {
      std::size_t sl = 0, cl = 0;
      for (int v : sup) sl = sl * s.dims[v] + digit(s, dg, x, c, v);
      for (int v : comp) cl = cl * s.dims[v] + digit(s, dg, x, c, v);
      si = si * ds_ + sl;
      ci = ci * dcc + cl;
    }
    glob_[si * dc_ + ci] = static_cast<std::uint32_t>(x);
  }

  const SymGroup& g = sym_group(k_);
  std::size_t n = g.order();
  perm_.assign(n, std::vector<std::uint32_t>(dsk_));
  std::vector<std::size_t> stride(k_, 1);
  for (int c = k_ - 2; c >= 0; --c) stride[c] = stride[c + 1] * ds_;
  for (std::size_t r = 0; r < n; ++r) {
    const Perm& sg = g.elem(r);
    for (std::size_t a = 0; a < dsk_; ++a) {
      // copy c of the input lands in copy sg(c)
      std::size_t b = 0;
      for (int c = 0; c < k_; ++c) {
        std::size_t dig = (a / stride[c]) % ds_;
        b += dig * stride[sg.image[c]];
      }
      perm_[r][a] = static_cast<std::uint32_t>(b);
    }
  }

  Eigen::MatrixXd gram(n, n);
  double lds = std::log(static_cast<double>(ds_));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) gram(a, b) = std::exp(g.quotient_cycles(a, b) * lds);
  ginv_ = sym_pinv(gram, rank_);
}

template <class Mat>
Mat TwirlOp::apply(const Mat& x) const {
  using Scalar = typename Mat::Scalar;
  using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::size_t n = perm_.size();
  std::vector<Block> y(n, Block::Zero(dc_, dc_));
  for (std::size_t r = 0; r < n; ++r) {
    Block& yr = y[r];
    for (std::size_t a = 0; a < dsk_; ++a) {
      const std::uint32_t* rows = &glob_[perm_[r][a] * dc_];
      const std::uint32_t* cols = &glob_[a * dc_];
      for (std::size_t j = 0; j < dc_; ++j)
        for (std::size_t i = 0; i < dc_; ++i) yr(i, j) += x(rows[i], cols[j]);
    }
  }
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (std::size_t t = 0; t < n; ++t) {
    Block z = Block::Zero(dc_, dc_);
    for (std::size_t r = 0; r < n; ++r)
      if (ginv_(t, r) != 0.0) z += ginv_(t, r) * y[r];
    for (std::size_t a = 0; a < dsk_; ++a) {
      const std::uint32_t* rows = &glob_[perm_[t][a] * dc_];
      const std::uint32_t* cols = &glob_[a * dc_];
      for (std::size_t j = 0; j < dc_; ++j)
        for (std::size_t i = 0; i < dc_; ++i) out(rows[i], cols[j]) += z(i, j);
    }
  }
  return out;
}

template Eigen::MatrixXd TwirlOp::apply(const Eigen::MatrixXd&) const;
template Eigen::MatrixXcd TwirlOp::apply(const Eigen::MatrixXcd&) const;

Eigen::MatrixXd exact_twirl_apply(const SiteSpace& s, const TwirlSpec& t, const Eigen::MatrixXd& x) {
  return TwirlOp(s, t).apply(x);
}

Eigen::MatrixXcd exact_twirl_apply(const SiteSpace& s, const TwirlSpec& t, const Eigen::MatrixXcd& x) {
  return TwirlOp(s, t).apply(x);
}

std::vector<std::uint32_t> swap_permutation(const SiteSpace& s, const SwapSpec& sw) {
  check_space(s);
  int nsites = static_cast<int>(s.dims.size());
  std::set<int> seen;
  for (auto [a, b] : sw.pairs) {
    if (a < 0 || b < 0 || a >= nsites || b >= nsites || a == b) throw DomainError("bad swap pair");
    if (!seen.insert(a).second || !seen.insert(b).second) throw DomainError("swap pairs overlap");
    if (s.dims[a] != s.dims[b]) throw DomainError("swapped sites differ in dimension");
  }
  Digits dg = digits_of(s);
  std::size_t D = s.dim();
  std::vector<std::uint32_t> out(D);
  for (std::size_t x = 0; x < D; ++x) {
    std::size_t y = x;
    for (int c = 0; c < s.k; ++c)
      for (auto [a, b] : sw.pairs) {
        long da = digit(s, dg, x, c, a), db = digit(s, dg, x, c, b);
        long delta = (db - da) * static_cast<long>(dg.site_stride[a]) + (da - db) * static_cast<long>(dg.site_stride[b]);
        y = static_cast<std::size_t>(static_cast<long>(y) + delta * static_cast<long>(dg.copy_stride[c]));
      }
    out[x] = static_cast<std::uint32_t>(y);
  }
  return out;
}

ChannelOp::ChannelOp(const ProtocolChannel& c) : dim_(c.dim()) {
  check_space(c.space);
  for (const auto& l : c.layers) {
    if (l.is_swap) {
      kind_.push_back(1);
      slot_.push_back(swaps_.size());
      swaps_.push_back(std::make_shared<const std::vector<std::uint32_t>>(swap_permutation(c.space, l.swap)));
    } else {
      kind_.push_back(0);
      slot_.push_back(twirls_.size());
      twirls_.push_back(std::make_shared<const TwirlOp>(c.space, l.twirl));
    }
  }
}

ChannelOp ChannelOp::adjoint() const {
  ChannelOp r = *this;
  std::reverse(r.kind_.begin(), r.kind_.end());
  std::reverse(r.slot_.begin(), r.slot_.end());
  return r;
}

template <class Mat>
Mat ChannelOp::run(const Mat& x) const {
  Mat cur = x;
  for (std::size_t i = 0; i < kind_.size(); ++i) {
    if (kind_[i] == 0) {
      cur = twirls_[slot_[i]]->apply(cur);
    } else {
      const auto& pm = *swaps_[slot_[i]];
      Mat nxt(cur.rows(), cur.cols());
      for (Eigen::Index j = 0; j < cur.cols(); ++j)
        for (Eigen::Index r = 0; r < cur.rows(); ++r) nxt(pm[r], pm[j]) = cur(r, j);
      cur.swap(nxt);
    }
  }
  return cur;
}

Eigen::MatrixXd ChannelOp::apply(const Eigen::MatrixXd& x) const { return run(x); }
Eigen::MatrixXcd ChannelOp::apply(const Eigen::MatrixXcd& x) const { return run(x); }

NormResult norm_2to2_diff(const ProtocolChannel& proto, const ProtocolChannel& ref, double tol, std::uint64_t seed) {
  if (!(tol > 1e-12 && tol < 1e-2)) throw DomainError("tolerance must lie in (1e-12, 1e-2)");
  if (proto.space.dims != ref.space.dims || proto.space.k != ref.space.k)
    throw DomainError("channel dimensions differ");
  ChannelOp a(proto), b(ref);
  ChannelOp at = a.adjoint(), bt = b.adjoint();
  auto D = static_cast<Eigen::Index>(a.dim());
  LinearOp op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& w) {
    Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(v.data(), D, D);
    Eigen::MatrixXd d = a.apply(x) - b.apply(x);
    Eigen::MatrixXd e = at.apply(d) - bt.apply(d);
    w = Eigen::Map<const Eigen::VectorXd>(e.data(), D * D);
  };
  LanczosOptions lo;
  lo.tol = tol;
  lo.seed = seed;
  LanczosResult r = lanczos_extremal(op, D * D, lo);
  if (!r.converged)
    throw NumericError("norm iteration did not converge; Ritz estimate " + std::to_string(std::sqrt(std::max(0.0, r.lambda_max))));
  NormResult out;
  out.value = std::sqrt(std::max(0.0, r.lambda_max));
  out.iterations = r.iterations;
  out.converged = true;
  return out;
}

std::vector<double> alternating_norms(const ProtocolChannels& ch, int n_max, double tol) {
  std::vector<double> out;
  ProtocolChannel qp = then(ch.P, ch.Q);
  for (int n = 1; n <= n_max; ++n) out.push_back(norm_2to2_diff(power(qp, n), ch.R, tol).value);
  return out;
}

Eigen::MatrixXd choi_matrix(const ProtocolChannel& c) {
  if (c.dim() > kMaxChoiDim) throw CapacityError("Choi matrix needs global dimension <= 64");
  ChannelOp op(c);
  auto D = static_cast<Eigen::Index>(c.dim());
  Eigen::MatrixXd J(D * D, D * D);
  parallel_for(static_cast<std::size_t>(D * D), [&](std::size_t idx) {
    Eigen::Index i = static_cast<Eigen::Index>(idx) / D, j = static_cast<Eigen::Index>(idx) % D;
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(D, D);
    e(i, j) = 1.0;
    J.block(i * D, j * D, D, D) = op.apply(e);
  });
  return J;
}

Eigen::MatrixXcd choi_matrix_complex(const ProtocolChannel& c) { return choi_matrix(c).cast<cplx>(); }

RelativeErrorReport relative_error_from_choi(const Eigen::MatrixXd& jp, const Eigen::MatrixXd& jr) {
  RelativeErrorReport rep;
  Eigen::MatrixXd sr = 0.5 * (jr + jr.transpose());
  Eigen::MatrixXd sp = 0.5 * (jp + jp.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sr);
  const auto& ev = es.eigenvalues();
  double top = std::max(ev.maxCoeff(), 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > tol::projector * top) keep.push_back(i);
  rep.support_rank = static_cast<int>(keep.size());
  Eigen::MatrixXd V(sr.rows(), keep.size());
  Eigen::VectorXd isq(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    V.col(c) = es.eigenvectors().col(keep[c]);
    isq(c) = 1.0 / std::sqrt(ev(keep[c]));
  }
  Eigen::MatrixXd inner = V.transpose() * sp * V;
  Eigen::MatrixXd proj = V * inner * V.transpose();
  double nrm = std::max(sp.norm(), 1e-300);
  rep.outside_weight = (sp - proj).norm() / nrm;
  rep.support_ok = rep.outside_weight <= tol::projector * 10.0;
  if (!rep.support_ok) {
    rep.eps_plus = rep.eps_minus = kInf;
    return rep;
  }
  Eigen::MatrixXd C = isq.asDiagonal() * inner * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
  double hi = ec.eigenvalues().maxCoeff(), lo = ec.eigenvalues().minCoeff();
  rep.eps_plus = std::max(hi - 1.0, 0.0);
  rep.eps_minus = std::max(1.0 - lo, 0.0);
  if (rep.eps_plus < tol::clamp) rep.eps_plus = 0.0;
  if (rep.eps_minus < tol::clamp) rep.eps_minus = 0.0;
  return rep;
}

RelativeErrorReport choi_relative_error(const ProtocolChannel& proto, const ProtocolChannel& ref) {
  if (proto.space.dims != ref.space.dims || proto.space.k != ref.space.k)
    throw DomainError("channel dimensions differ");
  return relative_error_from_choi(choi_matrix(proto), choi_matrix(ref));
}

namespace {

// Products of per-block permutation operators O_a, a = (s_1..s_B) with tuple
// index sum_b rank(s_b) k!^(B-1-b), applied as index tables.
struct BlockPermBasis {
  std::size_t n = 0;                             // k!^B
  std::vector<std::vector<std::uint32_t>> img;   // img[a][x] = O_a x
  Eigen::MatrixXd gram;                          // tr(O_a^T O_b)
  std::vector<std::vector<std::size_t>> parts;   // tuple components
};

BlockPermBasis block_perm_basis(const SiteSpace& s, const std::vector<std::vector<int>>& blocks) {
  const SymGroup& g = sym_group(s.k);
  std::size_t kf = g.order();
  int nsites = static_cast<int>(s.dims.size());
  std::vector<int> owner(nsites, -1);
  std::vector<double> bdim(blocks.size(), 1.0);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int v : blocks[b]) {
      if (v < 0 || v >= nsites || owner[v] != -1) throw DomainError("blocks must partition the sites");
      owner[v] = static_cast<int>(b);
      bdim[b] *= s.dims[v];
    }
  for (int v : owner)
    if (v < 0) throw DomainError("blocks must partition the sites");
  for (double d : bdim)
    if (d < s.k) throw DomainError("block dimension below k: permutation operators are dependent");

  BlockPermBasis out;
  std::size_t B = blocks.size();
  out.n = 1;
  for (std::size_t b = 0; b < B; ++b) out.n *= kf;
  out.parts.assign(out.n, std::vector<std::size_t>(B));
  for (std::size_t a = 0; a < out.n; ++a) {
    std::size_t r = a;
    for (std::size_t b = B; b-- > 0;) {
      out.parts[a][b] = r % kf;
      r /= kf;
    }
  }
  Digits dg = digits_of(s);
  std::size_t D = s.dim();
  out.img.assign(out.n, std::vector<std::uint32_t>(D));
  parallel_for(out.n, [&](std::size_t a) {
    for (std::size_t x = 0; x < D; ++x) {
      std::size_t y = 0;
      for (int c = 0; c < s.k; ++c)
        for (int v = 0; v < nsites; ++v) {
          const Perm& p = g.elem(out.parts[a][owner[v]]);
          // copy c moves to copy p(c)
          y += digit(s, dg, x, c, v) * dg.site_stride[v] * dg.copy_stride[p.image[c]];
        }
      out.img[a][x] = static_cast<std::uint32_t>(y);
    }
  });
  out.gram.resize(out.n, out.n);
  for (std::size_t a = 0; a < out.n; ++a)
    for (std::size_t b = 0; b < out.n; ++b) {
      double v = 1.0;
      for (std::size_t i = 0; i < B; ++i) v *= std::pow(bdim[i], g.quotient_cycles(out.parts[a][i], out.parts[b][i]));
      out.gram(a, b) = v;
    }
  return out;
}

// Coefficients S with Phi(O_a) = sum_b S(b,a) O_b.
Eigen::MatrixXd span_action(const ChannelOp& op, const BlockPermBasis& bb, const Eigen::MatrixXd& gram_inv,
                            std::size_t D) {
  Eigen::MatrixXd S(bb.n, bb.n);
  std::vector<std::string> errs(bb.n);
  parallel_for(bb.n, [&](std::size_t a) {
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(D, D);
    for (std::size_t x = 0; x < D; ++x) o(bb.img[a][x], x) = 1.0;
    Eigen::MatrixXd y = op.apply(o);
    Eigen::VectorXd t(bb.n);
    for (std::size_t b = 0; b < bb.n; ++b) {
      double acc = 0.0;
      for (std::size_t x = 0; x < D; ++x) acc += y(bb.img[b][x], x);
      t(b) = acc;
    }
    Eigen::VectorXd coef = gram_inv * t;
    Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(D, D);
    for (std::size_t b = 0; b < bb.n; ++b)
      for (std::size_t x = 0; x < D; ++x) rec(bb.img[b][x], x) += coef(b);
    if ((rec - y).norm() > tol::cross * std::max(1.0, y.norm()))
      errs[a] = "channel output leaves the block permutation span";
    S.col(a) = coef;
  });
  for (const auto& e : errs)
    if (!e.empty()) throw DomainError(e);
  return S;
}

}  // namespace

RelativeErrorReport choi_relative_error_commutant(const ProtocolChannel& proto, const ProtocolChannel& ref,
                                                  const std::vector<std::vector<int>>& blocks, std::uint64_t seed) {
  if (proto.space.dims != ref.space.dims || proto.space.k != ref.space.k)
    throw DomainError("channel dimensions differ");
  const SiteSpace& s = proto.space;
  check_space(s);
  BlockPermBasis bb = block_perm_basis(s, blocks);
  std::size_t D = s.dim();
  std::size_t nb = bb.n;
  if (nb * nb > 4096) throw CapacityError("block permutation group too large for the regular representation");
  Eigen::MatrixXd gram_inv = bb.gram.inverse();

  // Both channels must factor through the block twirls on the input side.
  ProtocolChannel tin = twirl_channel(s, blocks);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd probe(D, D);
  for (std::size_t j = 0; j < D; ++j)
    for (std::size_t i = 0; i < D; ++i) probe(i, j) = gauss(rng);
  ChannelOp tin_op(tin);
  Eigen::MatrixXd twirled = tin_op.apply(probe);

  std::vector<Eigen::MatrixXd> y(2);
  const ProtocolChannel* chans[2] = {&proto, &ref};
  for (int w = 0; w < 2; ++w) {
    ChannelOp op(*chans[w]);
    Eigen::MatrixXd a = op.apply(probe), b = op.apply(twirled);
    if ((a - b).norm() > tol::cross * std::max(1.0, a.norm()))
      throw DomainError("channel does not factor through the block twirls");
    Eigen::MatrixXd S = span_action(op, bb, gram_inv, D);
    y[w] = (S * gram_inv).transpose();  // y(c, b): coefficient of O_c (x) O_b
  }

  // Regular representation of S_k^B x S_k^B: L(y)_{h', h} = y_{h' h^-1}.
  const SymGroup& g = sym_group(s.k);
  std::size_t B = blocks.size();
  auto tuple_index = [&](const std::vector<std::size_t>& parts) {
    std::size_t r = 0;
    for (auto v : parts) r = r * g.order() + v;
    return r;
  };
  std::vector<std::size_t> inv_t(nb);
  for (std::size_t a = 0; a < nb; ++a) {
    std::vector<std::size_t> p(B);
    for (std::size_t i = 0; i < B; ++i) p[i] = g.inv(bb.parts[a][i]);
    inv_t[a] = tuple_index(p);
  }
  std::vector<std::uint32_t> mul(nb * nb);
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<std::size_t> p(B);
      for (std::size_t i = 0; i < B; ++i) p[i] = g.mul(bb.parts[a][i], bb.parts[b][i]);
      mul[a * nb + b] = static_cast<std::uint32_t>(tuple_index(p));
    }
  std::size_t G = nb * nb;
  std::vector<Eigen::MatrixXd> L(2, Eigen::MatrixXd(G, G));
  for (std::size_t h1 = 0; h1 < G; ++h1)
    for (std::size_t h = 0; h < G; ++h) {
      std::size_t c = mul[(h1 / nb) * nb + inv_t[h / nb]];
      std::size_t b = mul[(h1 % nb) * nb + inv_t[h % nb]];
      for (int w = 0; w < 2; ++w) L[w](h1, h) = y[w](c, b);
    }
  return relative_error_from_choi(L[0], L[1]);
}

std::vector<Eigen::MatrixXd> block_permutation_operators(const SiteSpace& s,
                                                         const std::vector<std::vector<int>>& blocks) {
  check_space(s);
  BlockPermBasis bb = block_perm_basis(s, blocks);
  std::size_t D = s.dim();
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t a = 0; a < bb.n; ++a) {
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(D, D);
    for (std::size_t x = 0; x < D; ++x) o(bb.img[a][x], x) = 1.0;
    out.push_back(std::move(o));
  }
  return out;
}

Eigen::MatrixXcd haar_unitary(int d, std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  if (d < 1) throw DomainError("unitary dimension must be positive");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd z(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      double re = gauss(rng), im = gauss(rng);
      z(i, j) = cplx(re, im);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    cplx v = r(i, i);
    double a = std::abs(v);
    q.col(i) *= (a > 0.0 ? v / a : cplx(1.0, 0.0));
  }
  return q;
}

namespace {

// U applied to the supported sites of every copy, identity elsewhere.
Eigen::MatrixXcd lift_unitary(const SiteSpace& s, const std::vector<int>& support, const Eigen::MatrixXcd& u) {
  std::vector<int> sup = support;
  std::sort(sup.begin(), sup.end());
  Digits dg = digits_of(s);
  std::size_t D = s.dim();
  std::vector<std::size_t> sidx(D * s.k), rest(D);
  std::vector<char> in(s.dims.size(), 0);
  for (int v : sup) in[v] = 1;
  for (std::size_t x = 0; x < D; ++x) {
    std::size_t rr = 0;
    for (int c = 0; c < s.k; ++c) {
      std::size_t sl = 0;
      for (int v : sup) sl = sl * s.dims[v] + digit(s, dg, x, c, v);
      sidx[x * s.k + c] = sl;
      for (std::size_t v = 0; v < s.dims.size(); ++v)
        if (!in[v]) rr = rr * s.dims[v] + digit(s, dg, x, c, static_cast<int>(v));
    }
    rest[x] = rr;
  }
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(D, D);
  for (std::size_t y = 0; y < D; ++y)
    for (std::size_t x = 0; x < D; ++x) {
      if (rest[x] != rest[y]) continue;
      cplx v(1.0, 0.0);
      for (int c = 0; c < s.k; ++c) v *= u(sidx[x * s.k + c], sidx[y * s.k + c]);
      w(x, y) = v;
    }
  return w;
}

}  // namespace

SampledChannel::SampledChannel(const ProtocolChannel& c, int n_samples, std::uint64_t seed)
    : space_(c.space), layers_(c.layers), n_(n_samples) {
  if (n_samples < 1) throw DomainError("n_samples must be at least 1");
  check_space(space_);
  if (space_.dim() > kMaxChoiDim) throw CapacityError("sampled channels need global dimension <= 64");
  std::uint64_t layer = 0;
  for (const auto& l : layers_) {
    if (l.is_swap) {
      swaps_.push_back(swap_permutation(space_, l.swap));
      globals_.emplace_back();
    } else {
      TwirlOp check(space_, l.twirl);
      int d = static_cast<int>(check.support_dim());
      std::vector<Eigen::MatrixXcd> ws(n_);
      parallel_for(n_, [&](std::size_t i) {
        ws[i] = lift_unitary(space_, l.twirl.support, haar_unitary(d, seed, layer, i));
      });
      globals_.push_back(std::move(ws));
      swaps_.emplace_back();
    }
    ++layer;
  }
}

Eigen::MatrixXcd SampledChannel::apply_sample_range(const Eigen::MatrixXcd& x, int lo, int hi) const {
  Eigen::MatrixXcd cur = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    if (layers_[li].is_swap) {
      const auto& pm = swaps_[li];
      Eigen::MatrixXcd nxt(cur.rows(), cur.cols());
      for (Eigen::Index j = 0; j < cur.cols(); ++j)
        for (Eigen::Index r = 0; r < cur.rows(); ++r) nxt(pm[r], pm[j]) = cur(r, j);
      cur.swap(nxt);
      continue;
    }
    const auto& ws = globals_[li];
    if (hi - lo == 1) {
      cur = ws[lo] * cur * ws[lo].adjoint();
      continue;
    }
    // fixed-size sample blocks summed in order: independent of worker count
    int nblk = (n_ + kSampleBlock - 1) / kSampleBlock;
    std::vector<Eigen::MatrixXcd> part(nblk);
    parallel_for(nblk, [&](std::size_t b) {
      int s0 = static_cast<int>(b) * kSampleBlock, s1 = std::min(n_, s0 + kSampleBlock);
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(cur.rows(), cur.cols());
      for (int i = s0; i < s1; ++i) acc += ws[i] * cur * ws[i].adjoint();
      part[b] = std::move(acc);
    });
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(cur.rows(), cur.cols());
    for (const auto& p : part) sum += p;
    cur = sum / static_cast<double>(n_);
  }
  return cur;
}

Eigen::MatrixXcd SampledChannel::apply(const Eigen::MatrixXcd& x) const { return apply_sample_range(x, 0, n_); }

Eigen::MatrixXcd SampledChannel::choi() const {
  auto D = static_cast<Eigen::Index>(space_.dim());
  Eigen::MatrixXcd J(D * D, D * D);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j) {
      Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(D, D);
      e(i, j) = 1.0;
      J.block(i * D, j * D, D, D) = apply(e);
    }
  return J;
}

Eigen::MatrixXcd SampledChannel::sample_choi(int i) const {
  if (i < 0 || i >= n_) throw DomainError("sample index out of range");
  auto D = static_cast<Eigen::Index>(space_.dim());
  Eigen::MatrixXcd J(D * D, D * D);
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index b = 0; b < D; ++b) {
      Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(D, D);
      e(a, b) = 1.0;
      J.block(a * D, b * D, D, D) = apply_sample_range(e, i, i + 1);
    }
  return J;
}

SampledChannel haar_sample_channel(const ProtocolChannel& c, int n_samples, std::uint64_t seed) {
  return SampledChannel(c, n_samples, seed);
}

}  // namespace dforge
