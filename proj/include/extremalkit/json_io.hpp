#pragma once

#include <Eigen/Core>
#include <string>

#include "json.hpp"

#include "extremalkit/cone.hpp"
#include "extremalkit/pmp.hpp"
#include "extremalkit/problem.hpp"

namespace extremalkit {

/// Insertion-ordered JSON so emitted documents are byte-stable.
using Json = nlohmann::ordered_json;

/// Parse text; syntax errors surface as ParseError with the byte offset.
Json parse_json_text(const std::string& text);

ProblemSpec problem_spec_from_json(const Json& j);
ControlSpec control_spec_from_json(const Json& j);
Json problem_spec_to_json(const ProblemSpec& spec);

Json vector_to_json(const Eigen::VectorXd& v);
Json matrix_to_json(const Eigen::MatrixXd& m);

Json cone_to_json(const Cone& cone);
Json multiplier_check_to_json(const MultiplierCheck& check);
Json extremal_report_to_json(const ExtremalReport& report);

/// Serialize with objects one key per line, arrays inline, and every float
/// at 17 significant digits; ends with a newline.
std::string json_to_text(const Json& j);

}  // namespace extremalkit
