#pragma once

#include "designforge/angle.hpp"
#include "designforge/convert.hpp"
#include "designforge/oracle.hpp"
#include "designforge/treeplan.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dforge {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// {"value": v, "log_domain": flag}; non-finite values become strings.
json num(double v, bool log_domain = false);
json num_int(long long v);
// Inverse of num for doubles; accepts the string forms.
double num_value(const json& j);

json to_json(const ProtocolParams& p);
json to_json(const BoundConstants& c);
json to_json(const std::vector<NamedCheck>& checks);
json to_json(const AngleReport& r);
json to_json(const TpeBound& t);
json to_json(const OpenNorms& n);
json to_json(const IndexBound& b);
json to_json(const ConversionReport& c);
json to_json(const SwapEllReport& s);
json to_json(const CrosstwirlEpsReport& c);
json to_json(const CrosstwirlTree& t);
json to_json(const LatticePlan& p);
json to_json(const RelativeErrorReport& r);

json make_report(const std::string& command, json params, json results, const std::vector<std::string>& warnings,
                 std::optional<std::uint64_t> seed = std::nullopt);

// One ledger entry per cross-validation check.
struct LedgerEntry {
  std::string name;
  bool pass = false;
  json detail;
};

// Grids: "tiny" (oracle cross-validation) and "full" (adds the bound grid).
std::vector<LedgerEntry> run_verification(const std::string& grid, std::uint64_t seed);
json to_json(const std::vector<LedgerEntry>& ledger);

// Parameter grid for the bound-dominance sweep.
std::vector<ProtocolParams> dominance_grid();

}  // namespace dforge
