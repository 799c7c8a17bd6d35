#include "designforge/report.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

namespace dforge {

namespace {

std::string tag(const ProtocolParams& p) {
  std::ostringstream os;
  os << kind_name(p.kind) << " q=" << p.q << " k=" << p.k << " m=";
  for (std::size_t i = 0; i < p.parties.size(); ++i) os << (i ? "," : "") << p.parties[i].m;
  os << " l=";
  for (std::size_t i = 0; i < p.parties.size(); ++i) os << (i ? "," : "") << p.parties[i].ell;
  return os.str();
}

Eigen::MatrixXd gaussian(std::size_t D, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(D, D);
  for (std::size_t j = 0; j < D; ++j)
    for (std::size_t i = 0; i < D; ++i) x(i, j) = g(rng);
  return x;
}

int numeric_rank(const std::vector<Eigen::MatrixXd>& ops) {
  auto n = static_cast<Eigen::Index>(ops.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) g(a, b) = (ops[a].array() * ops[b].array()).sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  double top = es.eigenvalues().maxCoeff();
  int r = 0;
  for (Eigen::Index i = 0; i < n; ++i) r += es.eigenvalues()(i) > tol::projector * top ? 1 : 0;
  return r;
}

void oracle_vs_angle(std::vector<LedgerEntry>& out, const ProtocolParams& p, bool pinv) {
  LedgerEntry e;
  e.name = "oracle norm equals exact angle: " + tag(p);
  ExactOptions opt;
  opt.allow_rank_deficient = pinv;
  AngleReport a = exact_angle(p, opt);
  auto ch = protocol_channels(p);
  NormResult n = norm_2to2_diff(then(ch.P, ch.Q), ch.R);
  e.detail["oracle"] = num(n.value);
  e.detail["solver"] = a.solver;
  if (a.exact_angle) {
    e.detail["exact_angle"] = num(*a.exact_angle);
    e.detail["abs_diff"] = num(std::abs(*a.exact_angle - n.value));
    e.pass = std::abs(*a.exact_angle - n.value) <= tol::cross;
  } else {
    e.detail["exact_angle"] = nullptr;
  }
  out.push_back(e);
}

void alternating(std::vector<LedgerEntry>& out, const ProtocolParams& p) {
  LedgerEntry e;
  e.name = "alternating convergence n=1..4: " + tag(p);
  double c = *exact_angle(p).exact_angle;
  auto norms = alternating_norms(protocol_channels(p), 4);
  e.pass = true;
  json rows = json::array();
  for (std::size_t i = 0; i < norms.size(); ++i) {
    double bound = std::pow(c, 2.0 * (i + 1) - 1.0);
    rows.push_back({{"n", num_int(static_cast<long long>(i + 1))}, {"norm", num(norms[i])}, {"bound", num(bound)}});
    e.pass = e.pass && norms[i] <= bound + tol::cross;
  }
  e.detail["rows"] = rows;
  out.push_back(e);
}

void dominance(std::vector<LedgerEntry>& out, const ProtocolParams& p, std::uint64_t seed) {
  LedgerEntry e;
  e.name = "PR = RP = R = QR = RQ on probes: " + tag(p);
  auto ch = protocol_channels(p);
  ChannelOp P(ch.P), Q(ch.Q), R(ch.R);
  std::mt19937_64 rng(seed ^ 0xd0d0ULL);
  double worst = 0.0;
  for (int t = 0; t < 4; ++t) {
    Eigen::MatrixXd x = gaussian(ch.space.dim(), rng);
    Eigen::MatrixXd r = R.apply(x);
    double s = x.norm();
    for (const Eigen::MatrixXd& v : {P.apply(r), R.apply(P.apply(x)), Q.apply(r), R.apply(Q.apply(x))})
      worst = std::max(worst, (v - r).norm() / s);
  }
  e.detail["max_relative_residual"] = num(worst);
  e.pass = worst <= tol::projector;
  out.push_back(e);
}

void images(std::vector<LedgerEntry>& out, const ProtocolParams& p) {
  LedgerEntry e;
  e.name = "im P and im Q intersect in im R: " + tag(p);
  auto ch = protocol_channels(p);
  auto pb = block_permutation_operators(ch.space, ch.blocks);
  std::vector<int> all;
  for (const auto& b : ch.blocks) all.insert(all.end(), b.begin(), b.end());
  auto rb = block_permutation_operators(ch.space, {all});
  ChannelOp sw(ch.swap);
  std::vector<Eigen::MatrixXd> qb;
  for (const auto& o : pb) qb.push_back(sw.apply(o));
  std::vector<Eigen::MatrixXd> both = pb;
  both.insert(both.end(), qb.begin(), qb.end());
  int rp = numeric_rank(pb), rq = numeric_rank(qb), rpq = numeric_rank(both), rr = numeric_rank(rb);
  // im R lies in both images
  std::vector<Eigen::MatrixXd> pr = pb, qr = qb;
  pr.insert(pr.end(), rb.begin(), rb.end());
  qr.insert(qr.end(), rb.begin(), rb.end());
  bool contained = numeric_rank(pr) == rp && numeric_rank(qr) == rq;
  e.detail["rank_P"] = num_int(rp);
  e.detail["rank_Q"] = num_int(rq);
  e.detail["rank_P_plus_Q"] = num_int(rpq);
  e.detail["rank_R"] = num_int(rr);
  e.detail["intersection_dim"] = num_int(rp + rq - rpq);
  e.pass = contained && rp + rq - rpq == rr;
  out.push_back(e);
}

void involution(std::vector<LedgerEntry>& out, const ProtocolParams& p, std::uint64_t seed) {
  LedgerEntry e;
  e.name = "swap layer is an involution: " + tag(p);
  auto ch = protocol_channels(p);
  ChannelOp sw2(then(ch.swap, ch.swap));
  std::mt19937_64 rng(seed ^ 0x5a5aULL);
  Eigen::MatrixXd x = gaussian(ch.space.dim(), rng);
  e.pass = (sw2.apply(x).array() == x.array()).all();
  out.push_back(e);
}

void conversion(std::vector<LedgerEntry>& out, const ProtocolParams& p) {
  auto ch = protocol_channels(p);
  ProtocolChannel pqp = then(then(ch.P, ch.Q), ch.P);
  std::vector<double> ld;
  for (const auto& pt : p.parties) ld.push_back(pt.m * std::log(static_cast<double>(p.q)));
  IndexBound idx = cb_index_bound(ld, p.k);
  for (int n = 1; n <= 6; ++n) {
    LedgerEntry e;
    e.name = "relative error within converted bound, (PQP)^" + std::to_string(n) + ": " + tag(p);
    ProtocolChannel phi = power(pqp, n);
    double gamma = norm_2to2_diff(phi, ch.R).value;
    RelativeErrorReport rel = choi_relative_error_commutant(phi, ch.R, ch.blocks);
    ConversionReport coarse = tpe_to_relative(gamma, idx);
    ConversionReport exact = tpe_to_relative(gamma, idx, true);
    e.detail["gamma"] = num(gamma);
    e.detail["measured"] = to_json(rel);
    e.detail["coarse"] = {{"epsilon", num(coarse.epsilon)}, {"valid", coarse.valid}};
    e.detail["exact_index"] = {{"epsilon", num(exact.epsilon)}, {"valid", exact.valid}};
    bool ok = rel.support_ok;
    if (coarse.valid) ok = ok && rel.epsilon() <= coarse.epsilon + tol::cross;
    if (exact.valid) ok = ok && rel.epsilon() <= exact.epsilon + tol::cross;
    e.pass = ok;
    out.push_back(e);
  }
}

void choi_routes(std::vector<LedgerEntry>& out) {
  LedgerEntry e;
  e.name = "Choi routes agree: local vs global twirl, q=2 k=2 m=1,1";
  SiteSpace s{{2, 2}, 2};
  auto P = twirl_channel(s, {{0}, {1}});
  auto R = twirl_channel(s, {{0, 1}});
  auto a = choi_relative_error(P, R);
  auto b = choi_relative_error_commutant(P, R, {{0}, {1}});
  e.detail["brute"] = to_json(a);
  e.detail["structured"] = to_json(b);
  e.pass = a.support_ok && b.support_ok && a.epsilon() > 0.0 &&
           std::abs(a.eps_plus - b.eps_plus) <= tol::cross && std::abs(a.eps_minus - b.eps_minus) <= tol::cross;
  out.push_back(e);
}

void swap_sweep(std::vector<LedgerEntry>& out) {
  LedgerEntry e;
  e.name = "swap design relative error decreases in l: q=2 k=2 m=2";
  std::vector<double> eps;
  json rows = json::array();
  for (int l = 0; l <= 1; ++l) {
    auto ch = protocol_channels(swap_params(2, 2, 2, l));
    ProtocolChannel phi = then(then(ch.P, ch.swap), ch.P);
    auto r = choi_relative_error_commutant(phi, ch.R, ch.blocks);
    eps.push_back(r.epsilon());
    rows.push_back({{"l", num_int(l)}, {"epsilon", num(r.epsilon())}});
  }
  e.detail["rows"] = rows;
  e.pass = eps[1] < eps[0];
  out.push_back(e);
}

void sampling(std::vector<LedgerEntry>& out, std::uint64_t seed) {
  for (int k : {1, 2}) {
    LedgerEntry e;
    e.name = "Haar sampled twirl within 3 sigma, q=2 single site k=" + std::to_string(k);
    SiteSpace s{{2}, k};
    auto exact = twirl_channel(s, {{0}});
    const int n = 2000;
    SampledChannel sc(exact, n, seed);
    Eigen::MatrixXcd J = sc.choi();
    Eigen::MatrixXcd Je = choi_matrix_complex(exact);
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (sc.sample_choi(i) - J).squaredNorm();
    var /= (n - 1);
    double sigma = std::sqrt(var / n);
    double dist = (J - Je).norm();
    SampledChannel again(exact, n, seed);
    bool same = (again.choi().array() == J.array()).all();
    e.detail["distance"] = num(dist);
    e.detail["sigma"] = num(sigma);
    e.detail["repeatable"] = same;
    e.pass = same && dist <= 3.0 * sigma;
    out.push_back(e);
  }
}

void bound_grid(std::vector<LedgerEntry>& out) {
  LedgerEntry e;
  e.name = "analytic bound dominates exact angle on the grid";
  int checked = 0, violations = 0;
  double worst = kInf;
  json bad = json::array();
  for (const auto& p : dominance_grid()) {
    AngleReport r = exact_angle(p);
    if (!r.preconditions_met() || !(r.analytic_bound < 1.0) || !r.exact_angle) continue;
    ++checked;
    double margin = r.analytic_bound - *r.exact_angle;
    worst = std::min(worst, margin);
    if (margin < -tol::cross) {
      ++violations;
      bad.push_back(tag(p));
    }
  }
  e.detail["checked"] = num_int(checked);
  e.detail["violations"] = num_int(violations);
  e.detail["worst_margin"] = num(worst);
  e.detail["failing"] = bad;
  e.pass = checked > 0 && violations == 0;
  out.push_back(e);
}

}  // namespace

std::vector<ProtocolParams> dominance_grid() {
  std::vector<ProtocolParams> g;
  for (int q : {2, 3, 5})
    for (int k : {2, 3, 4})
      for (int m : {6, 10, 16, 24}) {
        for (int l : {1, m / 4, m / 2})
          if (l >= 1) g.push_back(swap_params(q, k, m, l));
        for (int l : {1, m / 3, m / 2, m - 1}) g.push_back(crosstwirl_params(q, k, m, l));
      }
  for (int q : {2, 5})
    for (int k : {2, 3})
      for (int m : {6, 12, 20})
        for (int l : {1, m / 3, m / 2}) {
          g.push_back(multi_params(q, k, {{m, l}, {m, l}, {m, l}}));
          g.push_back(multi_params(q, k, {{m, l}, {m + 2, std::max(1, l - 1)}}));
        }
  return g;
}

std::vector<LedgerEntry> run_verification(const std::string& grid, std::uint64_t seed) {
  if (grid != "tiny" && grid != "full") throw DomainError("unknown grid '" + grid + "' (tiny | full)");
  std::vector<LedgerEntry> out;
  ProtocolParams ct = crosstwirl_params(2, 2, 2, 1);
  ProtocolParams sw = swap_params(2, 2, 2, 1);
  ProtocolParams mc = multi_params(2, 3, {{1, 1}, {1, 1}});
  oracle_vs_angle(out, ct, false);
  oracle_vs_angle(out, sw, false);
  oracle_vs_angle(out, mc, true);
  alternating(out, ct);
  alternating(out, sw);
  dominance(out, sw, seed);
  dominance(out, ct, seed);
  images(out, sw);
  involution(out, sw, seed);
  choi_routes(out);
  swap_sweep(out);
  conversion(out, ct);
  sampling(out, seed);
  if (grid == "full") bound_grid(out);
  return out;
}

}  // namespace dforge
