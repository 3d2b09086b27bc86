#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "liabval/cashflows.hpp"
#include "liabval/gaussian_model.hpp"
#include "liabval/risk_measure.hpp"
#include "liabval/scenario_tree.hpp"
#include "liabval/valuation.hpp"

namespace liabval {

struct TreeInput {
  ScenarioTree tree;
  CashflowSet flows;
  std::size_t renormalized_parents = 0;  // sibling groups rescaled to sum to one
};

// CSV with header node_id,parent_id,time,branch_prob,density,x_o,x_f_1..x_f_m.
// The root row has an empty parent_id and empty flow columns. Sibling
// probabilities within 1e-12 of one are rescaled to sum to one exactly; larger
// deviations are left for validate_tree to reject. A non-empty `discount`
// multiplies every time-t flow by discount[t-1]. Throws DataError (with the
// line number) on malformed input and StructuralError on a malformed tree.
TreeInput read_tree_csv(std::istream& in, const std::vector<double>& discount = {});
TreeInput load_tree_csv(const std::filesystem::path& path, const std::vector<double>& discount = {});

// {"n", "T", "m", "A": T x n, "B": [{"t", "s", "matrix"}], "lambda": T x n}.
GaussianModel<double> gaussian_model_from_json(const nlohmann::json& j);

// {"kind": "var" | "es", "u"} or {"kind": "mixture", "atoms": [[q, w], ...]}.
RiskMeasureSpec risk_measure_from_json(const nlohmann::json& j);
nlohmann::json risk_measure_to_json(const RiskMeasureSpec& spec);

// {"periods": [...]} where each period is either {"values", "p", "q"} or
// {"mean_p", "mean_q", "sd"}; all periods must use the same form.
struct IidInput {
  std::vector<PeriodLaw> discrete;
  std::vector<NormalPeriodLaw> normal;
  bool is_normal() const noexcept { return !normal.empty(); }
  std::size_t horizon() const noexcept { return is_normal() ? normal.size() : discrete.size(); }
};
IidInput iid_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);

// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace liabval
