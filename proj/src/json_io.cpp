#include "extremalkit/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "extremalkit/errors.hpp"

namespace extremalkit {

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
}

namespace {

const Json& require_field(const Json& j, const char* name, const char* where) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw ValidationError(std::string(where) + ": missing field '" + name + "'");
  }
  return *it;
}

double as_number(const Json& j, const char* name, const char* where) {
  if (!j.is_number()) {
    throw ValidationError(std::string(where) + ": field '" + name +
                          "' must be a number");
  }
  return j.get<double>();
}

int as_int(const Json& j, const char* name, const char* where) {
  if (!j.is_number_integer()) {
    throw ValidationError(std::string(where) + ": field '" + name +
                          "' must be an integer");
  }
  return j.get<int>();
}

std::string as_string(const Json& j, const char* name, const char* where) {
  if (!j.is_string()) {
    throw ValidationError(std::string(where) + ": field '" + name +
                          "' must be a string");
  }
  return j.get<std::string>();
}

std::vector<double> as_number_array(const Json& j, const char* name,
                                    const char* where) {
  if (!j.is_array()) {
    throw ValidationError(std::string(where) + ": field '" + name +
                          "' must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    out.push_back(as_number(v, name, where));
  }
  return out;
}

std::vector<std::string> as_string_array(const Json& j, const char* name,
                                         const char* where) {
  if (!j.is_array()) {
    throw ValidationError(std::string(where) + ": field '" + name +
                          "' must be an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& v : j) {
    out.push_back(as_string(v, name, where));
  }
  return out;
}

}  // namespace

ProblemSpec problem_spec_from_json(const Json& j) {
  constexpr const char* where = "problem description";
  if (!j.is_object()) {
    throw ValidationError(std::string(where) + ": top level must be an object");
  }
  ProblemSpec spec;
  spec.state_dim = as_int(require_field(j, "state_dim", where), "state_dim", where);
  spec.control_dim =
      as_int(require_field(j, "control_dim", where), "control_dim", where);
  spec.t_start = as_number(require_field(j, "t_start", where), "t_start", where);
  spec.t_end = as_number(require_field(j, "t_end", where), "t_end", where);
  spec.dynamics =
      as_string_array(require_field(j, "dynamics", where), "dynamics", where);
  spec.cost = as_string(require_field(j, "cost", where), "cost", where);

  if (const auto it = j.find("fiber"); it != j.end()) {
    if (!it->is_object()) {
      throw ValidationError(std::string(where) + ": field 'fiber' must be an object");
    }
    const std::string type =
        as_string(require_field(*it, "type", where), "fiber.type", where);
    if (type == "unconstrained") {
      spec.fiber.type = FiberSpec::Type::Unconstrained;
    } else if (type == "box") {
      spec.fiber.type = FiberSpec::Type::Box;
      spec.fiber.lo =
          as_number_array(require_field(*it, "lo", where), "fiber.lo", where);
      spec.fiber.hi =
          as_number_array(require_field(*it, "hi", where), "fiber.hi", where);
    } else if (type == "grid") {
      spec.fiber.type = FiberSpec::Type::Grid;
      const Json& pts = require_field(*it, "points", where);
      if (!pts.is_array()) {
        throw ValidationError(std::string(where) +
                              ": field 'fiber.points' must be an array");
      }
      for (const auto& p : pts) {
        spec.fiber.points.push_back(as_number_array(p, "fiber.points", where));
      }
    } else {
      throw ValidationError(std::string(where) + ": unknown fiber type '" + type +
                            "'");
    }
  }
  if (const auto it = j.find("x_start"); it != j.end()) {
    spec.x_start = as_number_array(*it, "x_start", where);
  }
  if (const auto it = j.find("x_end"); it != j.end()) {
    spec.x_end = as_number_array(*it, "x_end", where);
  }
  return spec;
}

ControlSpec control_spec_from_json(const Json& j) {
  constexpr const char* where = "control description";
  if (!j.is_object()) {
    throw ValidationError(std::string(where) + ": top level must be an object");
  }
  ControlSpec spec;
  spec.breakpoints = as_number_array(require_field(j, "breakpoints", where),
                                     "breakpoints", where);
  const Json& pieces = require_field(j, "pieces", where);
  if (!pieces.is_array()) {
    throw ValidationError(std::string(where) + ": field 'pieces' must be an array");
  }
  for (const auto& piece : pieces) {
    spec.pieces.push_back(as_string_array(piece, "pieces", where));
  }
  return spec;
}

Json problem_spec_to_json(const ProblemSpec& spec) {
  Json j;
  j["state_dim"] = spec.state_dim;
  j["control_dim"] = spec.control_dim;
  j["t_start"] = spec.t_start;
  j["t_end"] = spec.t_end;
  j["dynamics"] = spec.dynamics;
  j["cost"] = spec.cost;
  Json fiber;
  switch (spec.fiber.type) {
    case FiberSpec::Type::Unconstrained:
      fiber["type"] = "unconstrained";
      break;
    case FiberSpec::Type::Box:
      fiber["type"] = "box";
      fiber["lo"] = spec.fiber.lo;
      fiber["hi"] = spec.fiber.hi;
      break;
    case FiberSpec::Type::Grid:
      fiber["type"] = "grid";
      fiber["points"] = spec.fiber.points;
      break;
  }
  j["fiber"] = fiber;
  if (spec.x_start) j["x_start"] = *spec.x_start;
  if (spec.x_end) j["x_end"] = *spec.x_end;
  return j;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Json cone_to_json(const Cone& cone) {
  Json j;
  j["ambient"] = cone.ambient;
  Json gens = Json::array();
  for (const auto& g : cone.generators) gens.push_back(vector_to_json(g));
  j["generators"] = gens;
  j["dropped_zero_generators"] = cone.dropped_zero_generators;
  return j;
}

Json multiplier_check_to_json(const MultiplierCheck& check) {
  Json j;
  j["adjoint_residual"] = check.adjoint_residual;
  j["stationarity_residual"] = check.stationarity_residual;
  j["stationarity_applicable"] = check.stationarity_applicable;
  j["maximization_margin"] = check.maximization_margin;
  j["hamiltonian_scale"] = check.hamiltonian_scale;
  j["min_multiplier_norm"] = check.min_multiplier_norm;
  j["nonvanishing"] = check.nonvanishing;
  j["passes"] = check.passes;
  j["tol"] = check.tol;
  j["search_region"] = check.search_region;
  return j;
}

Json extremal_report_to_json(const ExtremalReport& report) {
  Json j;
  Json flags;
  flags["is_extremal"] = report.is_extremal;
  flags["is_normal"] = report.is_normal;
  flags["is_abnormal"] = report.is_abnormal;
  flags["is_strictly_abnormal"] = report.is_strictly_abnormal;
  flags["boundary_within_tol"] = report.boundary_within_tol;
  j["flags"] = flags;

  Json witnesses = Json::array();
  for (const auto& w : report.witnesses) {
    Json wj;
    wj["ray"] = vector_to_json(w.ray);
    wj["eta_b"] = vector_to_json(w.eta_b);
    wj["lambda"] = w.lambda;
    wj["polished"] = w.polished;
    wj["residuals"] = multiplier_check_to_json(w.check);
    wj["hamiltonian_drift"] = w.hamiltonian_drift;
    witnesses.push_back(wj);
  }
  j["witnesses"] = witnesses;

  Json diag;
  diag["extended_cone_dimension"] = report.extended_cone_dimension;
  diag["state_cone_dimension"] = report.state_cone_dimension;
  diag["dropped_zero_generators"] = report.dropped_zero_generators;
  diag["max_neg_lambda"] = report.max_neg_lambda;
  diag["max_stationarity_residual"] = report.max_stationarity_residual;
  diag["max_maximization_violation"] = report.max_maximization_violation;
  diag["hamiltonian_drift"] = report.hamiltonian_drift;
  Json rays = Json::array();
  for (const auto& r : report.dual_rays_extended) rays.push_back(vector_to_json(r));
  diag["dual_rays"] = rays;
  j["diagnostics"] = diag;

  Json sampling;
  sampling["time_samples"] = report.sampling.time_samples;
  sampling["fiber_samples"] = report.sampling.fiber_samples;
  sampling["seed"] = report.sampling.seed;
  sampling["tol"] = report.tol;
  j["sampling"] = sampling;

  j["note"] = report.note;
  return j;
}

namespace {

void append_number(double v, std::string& out) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_value(const Json& j, std::string& out, int depth) {
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out.append(static_cast<std::size_t>(depth + 1) * 2, ' ');
        out += Json(it.key()).dump();
        out += ": ";
        append_value(it.value(), out, depth + 1);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out.append(static_cast<std::size_t>(depth) * 2, ' ');
      out += "}";
      return;
    }
    case Json::value_t::array: {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ", ";
        append_value(j[i], out, depth);
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      append_number(j.get<double>(), out);
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string json_to_text(const Json& j) {
  std::string out;
  append_value(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace extremalkit
