// designforge: bounds, exact angles, lattice plans and the verification ledger.

#include "designforge/gram.hpp"
#include "designforge/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace dforge;

namespace {

enum Exit { kOk = 0, kParse = 1, kPrecondition = 2 };

struct PartyArgs {
  int q = 2;
  int k = 2;
  int P = 0;
  std::vector<int> m{4};
  std::vector<int> l{1};
};

void add_party_opts(CLI::App* c, PartyArgs& a) {
  c->add_option("--q", a.q, "local dimension")->check(CLI::Range(2, 1 << 20));
  c->add_option("--k", a.k, "copies")->check(CLI::Range(1, 1 << 20));
  c->add_option("--P", a.P, "party count (lists broadcast)")->check(CLI::Range(1, 64));
  c->add_option("--m", a.m, "qudits per party, comma list")->delimiter(',');
  c->add_option("--l", a.l, "swapped / crosstwirled qudits per party, comma list")->delimiter(',');
}

std::vector<Party> parties_of(const PartyArgs& a, int default_P) {
  int P = a.P > 0 ? a.P : std::max<int>({default_P, static_cast<int>(a.m.size()), static_cast<int>(a.l.size())});
  auto pick = [&](const std::vector<int>& v, int i, const char* name) {
    if (v.size() == 1) return v[0];
    if (static_cast<int>(v.size()) != P) throw CLI::ValidationError(std::string("--") + name, "list length must be 1 or P");
    return v[i];
  };
  std::vector<Party> out;
  for (int i = 0; i < P; ++i) out.push_back({pick(a.m, i, "m"), pick(a.l, i, "l")});
  return out;
}

ProtocolParams params_of(const PartyArgs& a, ProtocolKind kind) {
  ProtocolParams p;
  p.q = a.q;
  p.k = a.k;
  p.kind = kind;
  p.parties = parties_of(a, kind == ProtocolKind::multi_crosstwirl ? 0 : 2);
  return p;
}

std::vector<std::string> failed(const std::vector<NamedCheck>& checks) {
  std::vector<std::string> w;
  for (const auto& c : checks)
    if (!c.ok) w.push_back(c.name + " violated");
  return w;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object() && j.contains("log_domain") && j.contains("value")) {
    rows.push_back({prefix, j["value"].dump()});
    return;
  }
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), rows);
  } else {
    rows.push_back({prefix, j.dump()});
  }
}

void emit(const json& report, bool csv) {
  if (!csv) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(report["results"], "", rows);
  std::cout << "key,value\n";
  for (const auto& [k, v] : rows) std::cout << k << "," << v << "\n";
}

void write_csv_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_matrix_csv(os, m);
}

Eigen::MatrixXd named_matrix(const std::string& name, const ProtocolParams& p) {
  if (name == "gram") {
    return gram_matrix_log(p.k, p.parties.at(0).m * std::log(static_cast<double>(p.q))).entries;
  }
  if (name == "M") return build_M(p);
  if (name == "N") return build_N(p);
  if (name == "Nl") return build_N_ell(p);
  if (name == "X") return build_X(p);
  if (name == "Y") return build_Y(p);
  throw CLI::ValidationError("--dump-matrix", "expected gram, M, N, Nl, X or Y");
}

std::vector<int> parse_region(const std::string& s) {
  std::vector<int> ids;
  auto colon = s.find(':');
  if (colon != std::string::npos) {
    int a = std::stoi(s.substr(0, colon)), b = std::stoi(s.substr(colon + 1));
    for (int i = a; i < b; ++i) ids.push_back(i);
    return ids;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
  return ids;
}

std::string echo(int argc, char** argv) {
  std::string s = "designforge";
  for (int i = 1; i < argc; ++i) s += std::string(" ") + argv[i];
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"designforge: approximate unitary design bounds and planners"};
  app.require_subcommand(1);
  bool csv = false;
  bool as_json = true;
  app.add_flag("--json", as_json, "JSON output (default)");
  app.add_flag("--csv", csv, "CSV output");

  // bound
  auto* bound = app.add_subcommand("bound", "analytic bounds");
  std::string bkind;
  PartyArgs ba;
  double beps = 0.01;
  bound->add_option("kind", bkind, "swap | crosstwirl | multict | tpe | rel-swap | rel-crosstwirl")
      ->required()
      ->check(CLI::IsMember({"swap", "crosstwirl", "multict", "tpe", "rel-swap", "rel-crosstwirl"}));
  add_party_opts(bound, ba);
  bound->add_option("--eps", beps, "target relative error (rel-swap)");
  bound->add_flag("--json", as_json, "JSON output (default)");
  bound->add_flag("--csv", csv, "CSV output");

  // angle
  auto* angle = app.add_subcommand("angle", "exact subspace angle");
  std::string akind = "crosstwirl";
  PartyArgs aa;
  bool pinv = false, mfree = false;
  std::string dump_gram, dump_matrix;
  angle->add_option("--kind", akind, "swap | crosstwirl | multict")
      ->check(CLI::IsMember({"swap", "crosstwirl", "multict"}));
  add_party_opts(angle, aa);
  angle->add_flag("--allow-rank-deficient", pinv, "pseudo-inverse on singular Grams");
  angle->add_flag("--matrix-free", mfree, "force the Lanczos path");
  angle->add_option("--dump-gram", dump_gram, "write the party Gram matrix as CSV");
  angle->add_option("--dump-matrix", dump_matrix, "NAME:FILE with NAME in M, N, Nl, X, Y");
  angle->add_flag("--json", as_json, "JSON output (default)");
  angle->add_flag("--csv", csv, "CSV output");

  // plan
  auto* plan = app.add_subcommand("plan", "lattice crosstwirl plan");
  int pD = 1, pK = 2, pq = 2;
  long pM = 1024;
  double peps = 0.5;
  std::string region;
  plan->add_option("--D", pD, "lattice dimension")->check(CLI::Range(1, 6));
  plan->add_option("--M", pM, "qudit count, a power of 2^D")->required();
  plan->add_option("--K", pK, "design order")->check(CLI::Range(1, 64));
  plan->add_option("--q", pq, "local dimension")->check(CLI::Range(2, 1 << 20));
  plan->add_option("--eps", peps, "target relative error")->check(CLI::Range(0.0, 1.0));
  plan->add_option("--region", region, "qudit ids a:b or comma list for the communication budget");
  plan->add_flag("--json", as_json, "JSON output (default)");
  plan->add_flag("--csv", csv, "CSV layer schedule");

  // norms
  auto* norms = app.add_subcommand("norms", "open-question matrix norms");
  std::string nkind = "Y";
  PartyArgs na;
  norms->add_option("--kind", nkind, "X | Y")->check(CLI::IsMember({"X", "Y"}));
  add_party_opts(norms, na);
  norms->add_flag("--json", as_json, "JSON output (default)");
  norms->add_flag("--csv", csv, "CSV output");

  // verify
  auto* verify = app.add_subcommand("verify", "cross-validation ledger");
  std::string grid = "tiny";
  std::uint64_t seed = 0;
  verify->add_option("--grid", grid, "tiny | full")->check(CLI::IsMember({"tiny", "full"}));
  verify->add_option("--seed", seed, "RNG seed")->required();
  verify->add_flag("--json", as_json, "JSON output (default)");

  // dump
  auto* dump = app.add_subcommand("dump", "write a protocol matrix as CSV");
  std::string what = "gram", dkind = "crosstwirl", out_path;
  PartyArgs da;
  dump->add_option("--what", what, "gram | M | N | Nl | X | Y")
      ->check(CLI::IsMember({"gram", "M", "N", "Nl", "X", "Y"}));
  dump->add_option("--kind", dkind, "swap | crosstwirl | multict")
      ->check(CLI::IsMember({"swap", "crosstwirl", "multict"}));
  add_party_opts(dump, da);
  dump->add_option("--out", out_path, "output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  const std::string cmd = echo(argc, argv);
  try {
    if (*bound) {
      json results, params;
      std::vector<std::string> warn;
      bool ok = true;
      if (bkind == "swap" || bkind == "crosstwirl" || bkind == "multict") {
        ProtocolKind kind = bkind == "multict" ? ProtocolKind::multi_crosstwirl : parse_kind(bkind);
        ProtocolParams p = params_of(ba, kind);
        params = to_json(p);
        AngleReport r = analytic_report(p);
        results = to_json(r);
        warn = failed(r.preconditions);
        warn.insert(warn.end(), r.warnings.begin(), r.warnings.end());
        ok = r.preconditions_met();
      } else if (bkind == "tpe") {
        ProtocolParams p = params_of(ba, ProtocolKind::multi_crosstwirl);
        params = to_json(p);
        TpeBound t = tpe_bound_multict(p);
        results = to_json(t);
        warn = failed(t.checks);
        if (!t.raw_condition_as_printed)
          warn.push_back("condition K^2 sum q^(l_p) <= 1 as printed fails; q^(-l_p) form used");
        ok = t.preconditions_met();
      } else if (bkind == "rel-swap") {
        params = {{"q", num_int(ba.q)}, {"k", num_int(ba.k)}, {"m", num_int(ba.m.at(0))}, {"eps", num(beps)}};
        SwapEllReport s = swap_design_ell(ba.k, ba.q, ba.m.at(0), beps);
        results = to_json(s);
        if (!s.feasible) warn.push_back("required l exceeds m/2");
        ok = s.feasible;
      } else {
        ProtocolParams p = params_of(ba, ProtocolKind::multi_crosstwirl);
        params = to_json(p);
        CrosstwirlEpsReport c = crosstwirl_design_eps(p);
        results = to_json(c);
        warn = failed(c.checks);
        if (!c.valid) warn.push_back("epsilon >= 1");
        ok = c.preconditions_met() && c.valid;
      }
      emit(make_report(cmd, params, results, warn), csv);
      return ok ? kOk : kPrecondition;
    }
    if (*angle) {
      ProtocolKind kind = akind == "multict" ? ProtocolKind::multi_crosstwirl : parse_kind(akind);
      ProtocolParams p = params_of(aa, kind);
      ExactOptions opt;
      opt.allow_rank_deficient = pinv;
      opt.force_matrix_free = mfree;
      AngleReport r = exact_angle(p, opt);
      if (!dump_gram.empty()) write_csv_file(dump_gram, named_matrix("gram", p));
      if (!dump_matrix.empty()) {
        auto c = dump_matrix.find(':');
        if (c == std::string::npos) throw CLI::ValidationError("--dump-matrix", "expected NAME:FILE");
        write_csv_file(dump_matrix.substr(c + 1), named_matrix(dump_matrix.substr(0, c), p));
      }
      std::vector<std::string> warn = failed(r.exact_checks);
      warn.insert(warn.end(), r.warnings.begin(), r.warnings.end());
      emit(make_report(cmd, to_json(p), to_json(r), warn), csv);
      return r.exact_angle ? kOk : kPrecondition;
    }
    if (*plan) {
      LatticePlan lp = plan_lattice(pM, pD, pK, pq, peps);
      json results = to_json(lp);
      if (!region.empty()) {
        Region rg = make_region(lattice_for(pM, pD), parse_region(region));
        results["region"] = {{"size", num_int(static_cast<long long>(rg.qudits.size()))},
                             {"boundary", num_int(rg.boundary)},
                             {"contiguous", rg.contiguous},
                             {"comm_budget", num(comm_budget(lp, rg))},
                             {"comm_budget_tree", num(comm_budget_tree(lp.tree, rg, pq))}};
      }
      json params = {{"D", num_int(pD)}, {"M", num_int(pM)}, {"K", num_int(pK)}, {"q", num_int(pq)}, {"eps", num(peps)}};
      bool ok = std::all_of(lp.checks.begin(), lp.checks.end(), [](const NamedCheck& c) { return c.ok; });
      std::vector<std::string> warn = lp.warnings;
      for (auto& f : failed(lp.checks)) warn.push_back(f);
      if (csv) {
        std::cout << "layer,path,size,crosstwirl_qudits\n";
        for (const auto& layer : lp.tree.layers())
          for (int i : layer) {
            const auto& n = lp.tree.nodes[i];
            std::string path;
            for (int v : n.path) path += std::to_string(v);
            std::size_t cq = 0;
            for (const auto& s : n.cross_sets) cq += s.size();
            std::cout << n.path.size() << "," << (path.empty() ? "root" : path) << "," << n.qudits.size() << "," << cq
                      << "\n";
          }
      } else {
        emit(make_report(cmd, params, results, warn), false);
      }
      return ok ? kOk : kPrecondition;
    }
    if (*norms) {
      ProtocolParams p = params_of(na, nkind == "X" ? ProtocolKind::swap : ProtocolKind::crosstwirl);
      OpenNorms o = open_question_norms(p);
      json results = to_json(o);
      if (o.normY) results["triangle_ok"] = *o.normY <= *o.normD + *o.normK + 1e-12 * (*o.normD + *o.normK);
      emit(make_report(cmd, to_json(p), results, {}), csv);
      return kOk;
    }
    if (*verify) {
      auto ledger = run_verification(grid, seed);
      bool ok = std::all_of(ledger.begin(), ledger.end(), [](const LedgerEntry& e) { return e.pass; });
      json results = {{"grid", grid}, {"all_pass", ok}, {"entries", to_json(ledger)}};
      std::cout << make_report(cmd, {{"grid", grid}}, results, {}, seed).dump(2) << "\n";
      return ok ? kOk : kPrecondition;
    }
    if (*dump) {
      ProtocolKind kind = dkind == "multict" ? ProtocolKind::multi_crosstwirl : parse_kind(dkind);
      ProtocolParams p = params_of(da, kind);
      Eigen::MatrixXd m = named_matrix(what, p);
      if (out_path.empty())
        write_matrix_csv(std::cout, m);
      else
        write_csv_file(out_path, m);
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const DomainError& e) {
    std::cerr << "precondition failure: " << e.what() << "\n";
    return kPrecondition;
  } catch (const CapacityError& e) {
    std::cerr << "capacity exceeded: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecondition;
  }
  return kOk;
}
