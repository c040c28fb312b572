#pragma once

// JSON documents written by the command-line tool. Matrices are objects
// {"rows": r, "cols": c, "data": [row-major entries]}; non-finite numbers are null.

#include "linkreg/inference.hpp"
#include "linkreg/match_prob.hpp"
#include "linkreg/model.hpp"
#include "linkreg/monte_carlo.hpp"

#include <json.hpp>

namespace linkreg {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);

Json to_json(const FitResult& fit);
Json to_json(const SandwichEstimate& s);
Json to_json(const GapReport& report);
Json to_json(const ScenarioConfig& config);
/// Provenance counts plus every cell.
Json to_json(const MatchProbTable& table);
/// Everything except wall-clock metadata lives outside the "metadata" member.
Json to_json(const MCReport& report);

}  // namespace linkreg
