#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using json = nlohmann::ordered_json;

namespace {

struct Run {
  std::string out;
  int code = -1;
};

Run run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + "\"" + DESIGNFORGE_CLI + "\" " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string golden(const std::string& name) {
  std::ifstream in(std::string(GOLDEN_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Structural equality with a relative tolerance on numbers.
bool same(const json& a, const json& b, std::string path, std::string& where) {
  if (a.is_number() && b.is_number()) {
    double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)})) return true;
    where = path;
    return false;
  }
  if (a.type() != b.type() || a.size() != b.size()) {
    where = path;
    return false;
  }
  if (a.is_object()) {
    for (auto it = a.begin(), jt = b.begin(); it != a.end(); ++it, ++jt)
      if (it.key() != jt.key() || !same(it.value(), jt.value(), path + "/" + it.key(), where)) {
        if (where.empty()) where = path + "/" + it.key();
        return false;
      }
    return true;
  }
  if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!same(a[i], b[i], path + "/" + std::to_string(i), where)) return false;
    return true;
  }
  if (a != b) where = path;
  return a == b;
}

void check_golden(const std::string& args, const std::string& file, int code) {
  Run r = run(args);
  CAPTURE(args);
  CHECK(r.code == code);
  std::string where;
  bool ok = same(json::parse(r.out), json::parse(golden(file)), "", where);
  CAPTURE(where);
  CHECK(ok);
}

// Every {"value", "log_domain"} pair under a key starting with log_ is flagged.
void check_log_flags(const json& j, const std::string& key, int& seen) {
  if (j.is_object()) {
    if (j.contains("log_domain") && j.contains("value")) {
      ++seen;
      if (key.rfind("log_", 0) == 0) CHECK(j["log_domain"].get<bool>());
      return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) check_log_flags(it.value(), it.key(), seen);
  } else if (j.is_array()) {
    for (const auto& e : j) check_log_flags(e, key, seen);
  }
}

}  // namespace

TEST_CASE("golden outputs") {
  check_golden("bound swap --q 2 --k 2 --m 10 --l 3", "bound_swap.json", 0);
  check_golden("bound tpe --q 2 --k 2 --P 2 --l 8,8 --m 24,24", "bound_tpe.json", 0);
  check_golden("bound swap --k 100 --q 2 --m 4", "bound_swap_guard.json", 2);
  check_golden("bound rel-swap --q 2 --k 2 --m 40 --eps 0.0009765625", "bound_rel_swap.json", 0);
  check_golden("bound rel-swap --q 2 --k 2 --m 20 --eps 0.0009765625", "bound_rel_swap_infeasible.json", 2);
  check_golden("bound rel-crosstwirl --q 2 --k 2 --P 2 --m 60 --l 20", "bound_rel_crosstwirl.json", 0);
  check_golden("plan --D 1 --M 1024 --K 2 --q 2 --eps 0.5 --region 300:400", "plan_d1.json", 0);
  check_golden("norms --kind Y --q 2 --k 2 --m 3 --l 1", "norms_y.json", 0);
  check_golden("angle --kind crosstwirl --q 2 --k 2 --m 2 --l 1", "angle_crosstwirl.json", 0);
  check_golden("verify --grid tiny --seed 7", "verify_tiny_seed7.json", 0);
}

TEST_CASE("text outputs") {
  Run csv = run("plan --D 1 --M 1024 --K 2 --q 2 --eps 0.5 --csv");
  CHECK(csv.code == 0);
  CHECK(csv.out == golden("plan_d1.csv"));
  Run gram = run("dump --what gram --k 2 --q 2 --m 1");
  CHECK(gram.code == 0);
  CHECK(gram.out == golden("gram_k2.csv"));
}

TEST_CASE("headline values") {
  json sw = json::parse(run("bound swap --q 2 --k 2 --m 10 --l 3").out);
  CHECK(sw["results"]["analytic_bound"]["value"].get<double>() == doctest::Approx(0.745).epsilon(1e-3));
  json guard = json::parse(run("bound swap --k 100 --q 2 --m 4").out);
  bool flagged = false;
  for (const auto& w : guard["warnings"]) flagged = flagged || w.get<std::string>() == "k^2 < 2q^m violated";
  CHECK(flagged);
  json plan = json::parse(run("plan --D 1 --M 1024 --K 2 --q 2 --eps 0.5").out);
  CHECK(plan["results"]["ell"]["value"] == 22);
  CHECK(plan["results"]["P"]["value"] == 4);
  json norms = json::parse(run("norms --kind Y --q 2 --k 2 --m 3 --l 1").out);
  CHECK(std::isfinite(norms["results"]["normY"]["value"].get<double>()));
  CHECK(norms["results"]["normD"].is_object());
  CHECK(norms["results"]["normK"].is_object());
}

TEST_CASE("exit codes") {
  CHECK(run("bound swap --q x").code == 1);
  CHECK(run("bound nope --q 2").code == 1);
  CHECK(run("plan --D 1 --M 1000 --K 2 --q 2 --eps 0.5").code != 0);
  CHECK(run("verify --grid tiny").code == 1);
  CHECK(run("verify --grid huge --seed 1").code != 0);
  CHECK(run("angle --kind swap --q 2 --k 2 --m 3 --l 2").code == 2);
  CHECK(run("").code != 0);
}

TEST_CASE("verify is byte-identical across runs and worker counts") {
  Run a = run("verify --grid tiny --seed 7", "DESIGNFORGE_THREADS=1");
  Run b = run("verify --grid tiny --seed 7", "DESIGNFORGE_THREADS=1");
  Run c = run("verify --grid tiny --seed 7", "DESIGNFORGE_THREADS=6");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  Run d = run("verify --grid tiny --seed 8");
  CHECK(d.out != a.out);
}

TEST_CASE("log-domain flags") {
  for (const char* args : {"bound rel-crosstwirl --q 2 --k 2 --P 2 --m 60 --l 20", "norms --kind Y --q 2 --k 2 --m 3 --l 1",
                           "bound swap --q 2 --k 2 --m 10 --l 3"}) {
    int seen = 0;
    check_log_flags(json::parse(run(args).out), "", seen);
    CHECK(seen > 3);
  }
}
