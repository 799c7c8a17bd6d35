#include "designforge/report.hpp"

#include <cmath>

namespace dforge {

json num(double v, bool log_domain) {
  json j;
  if (std::isnan(v))
    j["value"] = "nan";
  else if (std::isinf(v))
    j["value"] = v > 0 ? "inf" : "-inf";
  else
    j["value"] = v;
  j["log_domain"] = log_domain;
  return j;
}

json num_int(long long v) {
  json j;
  j["value"] = v;
  j["log_domain"] = false;
  return j;
}

double num_value(const json& j) {
  const json& v = j.is_object() ? j.at("value") : j;
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::nan("");
  }
  return v.get<double>();
}

namespace {

json opt_num(const std::optional<double>& v, bool log_domain = false) {
  return v ? num(*v, log_domain) : json(nullptr);
}

}  // namespace

json to_json(const ProtocolParams& p) {
  json j;
  j["kind"] = kind_name(p.kind);
  j["q"] = num_int(p.q);
  j["k"] = num_int(p.k);
  j["P"] = num_int(p.P());
  json parties = json::array();
  for (const auto& pt : p.parties) parties.push_back({{"m", num_int(pt.m)}, {"l", num_int(pt.ell)}});
  j["parties"] = parties;
  return j;
}

json to_json(const BoundConstants& c) {
  json j;
  j["a"] = num(c.a);
  j["b"] = num(c.b);
  j["c"] = num(c.c);
  j["g"] = num(c.g);
  j["log_a"] = num(c.log_a, true);
  j["log_b"] = num(c.log_b, true);
  j["log_c"] = num(c.log_c, true);
  j["log_g"] = num(c.log_g, true);
  j["finite"] = c.finite;
  return j;
}

json to_json(const std::vector<NamedCheck>& checks) {
  json a = json::array();
  for (const auto& c : checks) a.push_back({{"name", c.name}, {"ok", c.ok}});
  return a;
}

json to_json(const AngleReport& r) {
  json j;
  j["params"] = to_json(r.params);
  j["exact_angle"] = opt_num(r.exact_angle);
  j["pencil_lambda_min"] = opt_num(r.pencil_lambda_min);
  j["solver"] = r.solver;
  j["analytic_bound"] = num(r.analytic_bound);
  j["analytic_bound_log"] = num(r.analytic_bound_log, true);
  j["theorem_bound"] = opt_num(r.theorem_bound);
  j["tpe_bound"] = opt_num(r.tpe_bound);
  j["constants"] = to_json(r.constants);
  j["preconditions"] = to_json(r.preconditions);
  j["preconditions_met"] = r.preconditions_met();
  j["exact_checks"] = to_json(r.exact_checks);
  j["warnings"] = r.warnings;
  return j;
}

json to_json(const TpeBound& t) {
  json j;
  j["value"] = num(t.value);
  j["checks"] = to_json(t.checks);
  j["preconditions_met"] = t.preconditions_met();
  j["raw_condition_as_printed"] = t.raw_condition_as_printed;
  j["dominates_prop"] = t.dominates_prop ? json(*t.dominates_prop) : json(nullptr);
  return j;
}

json to_json(const OpenNorms& n) {
  json j;
  j["normX"] = opt_num(n.normX);
  j["normY"] = opt_num(n.normY);
  j["normD"] = opt_num(n.normD);
  j["normK"] = opt_num(n.normK);
  j["constants"] = to_json(n.constants);
  return j;
}

json to_json(const IndexBound& b) {
  json j;
  json dims = json::array();
  for (double d : b.log_dims) dims.push_back(num(d, true));
  j["log_dims"] = dims;
  j["k"] = num_int(b.k);
  j["coarse"] = num(b.log_coarse, true);
  j["proof_display"] = num(b.log_proof_display, true);
  j["convert_form"] = num(b.log_convert_form, true);
  j["exact_schur_weyl"] = opt_num(b.log_exact, true);
  return j;
}

json to_json(const ConversionReport& c) {
  json j;
  j["gamma"] = num(c.gamma);
  j["index_bound"] = to_json(c.index);
  j["used_exact_index"] = c.used_exact_index;
  j["epsilon"] = num(c.epsilon);
  j["log_epsilon"] = num(c.log_epsilon, true);
  j["valid"] = c.valid;
  j["n_required"] = c.n_required ? num_int(*c.n_required) : json(nullptr);
  return j;
}

json to_json(const SwapEllReport& s) {
  json j;
  j["ell"] = num_int(s.ell);
  j["rhs"] = num(s.rhs);
  j["feasible"] = s.feasible;
  j["ell_proof_path"] = num_int(s.ell_proof_path);
  j["rhs_proof_path"] = num(s.rhs_proof_path);
  j["feasible_proof_path"] = s.feasible_proof_path;
  return j;
}

json to_json(const CrosstwirlEpsReport& c) {
  json j;
  j["epsilon"] = num(c.epsilon);
  j["log_epsilon"] = num(c.log_epsilon, true);
  j["proof_path"] = num(c.proof_path);
  j["log_proof_path"] = num(c.log_proof_path, true);
  j["valid"] = c.valid;
  j["checks"] = to_json(c.checks);
  j["preconditions_met"] = c.preconditions_met();
  json qd = json::array(), eb = json::array();
  for (int v : c.comm_qudits) qd.push_back(num_int(v));
  for (double v : c.comm_ebits) eb.push_back(num(v));
  j["comm_qudits"] = qd;
  j["comm_ebits"] = eb;
  j["comm_statement"] = c.comm_statement;
  return j;
}

json to_json(const CrosstwirlTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json j;
    j["path"] = n.path;
    j["size"] = num_int(static_cast<long long>(n.qudits.size()));
    j["qudits"] = n.qudits;
    j["children"] = n.children;
    j["cross_sets"] = n.cross_sets;
    nodes.push_back(j);
  }
  return nodes;
}

json to_json(const LatticePlan& p) {
  json j;
  j["D"] = num_int(p.D);
  j["M_total"] = num_int(p.M_total);
  j["q"] = num_int(p.q);
  j["K"] = num_int(p.K);
  j["eps"] = num(p.eps);
  j["ell_real"] = num(p.ell_real);
  j["ell"] = num_int(p.ell);
  j["s"] = num_int(p.s);
  j["leaf_side"] = num_int(p.leaf_side);
  j["P"] = num_int(p.P);
  j["depth"] = num_int(p.tree.depth());
  j["delta"] = num(p.delta);
  j["delta_statement"] = num(p.delta_statement);
  j["single_node"] = p.single_node;
  j["parallelizable"] = p.parallelizable;
  if (!p.certificate.ok)
    j["overlap"] = {{"qudit", p.certificate.qudit},
                    {"first", {p.certificate.first.first, p.certificate.first.second}},
                    {"second", {p.certificate.second.first, p.certificate.second.second}}};
  j["depth_budget"] = num(p.depth_budget);
  j["depth_budget_tree"] = num(p.tree_depth_budget);
  j["depth_function"] = "placeholder r*K*ceil(log2(1/delta)), not a construction from the source";
  j["crosstwirl_eps"] = num(p.crosstwirl_eps);
  j["composed_error_formula"] = num(p.composed_error_formula);
  j["composed_error_tree"] = num(p.composed_error_tree);
  j["checks"] = to_json(p.checks);
  j["tree"] = to_json(p.tree);
  return j;
}

json to_json(const RelativeErrorReport& r) {
  json j;
  j["eps_plus"] = num(r.eps_plus);
  j["eps_minus"] = num(r.eps_minus);
  j["epsilon"] = num(r.epsilon());
  j["support_ok"] = r.support_ok;
  j["outside_weight"] = num(r.outside_weight);
  j["support_rank"] = num_int(r.support_rank);
  return j;
}

json make_report(const std::string& command, json params, json results, const std::vector<std::string>& warnings,
                 std::optional<std::uint64_t> seed) {
  json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["params"] = std::move(params);
  j["results"] = std::move(results);
  j["warnings"] = warnings;
  return j;
}

json to_json(const std::vector<LedgerEntry>& ledger) {
  json a = json::array();
  for (const auto& e : ledger) a.push_back({{"name", e.name}, {"pass", e.pass}, {"detail", e.detail}});
  return a;
}

}  // namespace dforge
