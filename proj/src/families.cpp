#include "ebridge/families.hpp"

#include <json.hpp>

#include <utility>

#include "ebridge/error.hpp"

namespace ebridge {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::invalid_input, what); }

double number_field(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) bad("ensemble." + key + ": expected a number");
  return obj[key].get<double>();
}

int int_field(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) bad("ensemble." + key + ": expected an integer");
  return obj[key].get<int>();
}

Matrix parse_matrix(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) bad(where + ": expected a non-empty array of rows");
  const size_t rows = value.size();
  size_t cols = 0;
  Matrix out;
  for (size_t r = 0; r < rows; ++r) {
    const json& row = value[r];
    if (!row.is_array() || row.empty()) bad(where + ": each row must be a non-empty array");
    if (r == 0) {
      cols = row.size();
      out.resize(rows, cols);
    } else if (row.size() != cols) {
      bad(where + ": ragged rows");
    }
    for (size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) bad(where + ": non-numeric entry");
      out(r, c) = row[c].get<double>();
    }
  }
  return out;
}

EnsembleSpec from_named_family(const json& obj) {
  const std::string name = obj["family"].get<std::string>();
  if (name == "brownian") {
    const int d = int_field(obj, "dim", 1);
    if (d < 1) bad("ensemble.dim: must be >= 1");
    const int n = int_field(obj, "n_nodes", 1);
    return EnsembleSpec::uniform(n, [d](double) {
      return std::make_pair(Matrix::Zero(d, d), Matrix(Matrix::Identity(d, d)));
    });
  }
  if (name == "scalar_theta_drift") {
    const int n = int_field(obj, "n_nodes", 16);
    return EnsembleSpec::uniform(n, [](double theta) {
      Matrix a(1, 1), b(1, 1);
      a << theta;
      b << 1.0;
      return std::make_pair(a, b);
    });
  }
  if (name == "shifted_drift") {
    const int d = int_field(obj, "dim", 1);
    if (d < 1) bad("ensemble.dim: must be >= 1");
    const double shift = number_field(obj, "shift", -0.5);
    const double scale = number_field(obj, "scale", 1.0);
    const int n = int_field(obj, "n_nodes", 16);
    return EnsembleSpec::uniform(n, [d, shift, scale](double theta) {
      return std::make_pair(Matrix((shift + scale * theta) * Matrix::Identity(d, d)),
                            Matrix(Matrix::Identity(d, d)));
    });
  }
  if (name == "rank_deficient_input") {
    const int n = int_field(obj, "n_nodes", 1);
    return EnsembleSpec::uniform(n, [](double) {
      Matrix b(2, 1);
      b << 1.0, 0.0;
      return std::make_pair(Matrix(Matrix::Zero(2, 2)), b);
    });
  }
  if (name == "double_integrator") {
    const int n = int_field(obj, "n_nodes", 16);
    return EnsembleSpec::uniform(n, [](double theta) {
      Matrix a(2, 2), b(2, 1);
      a << 0.0, 1.0, 0.0, 0.0;
      b << 0.0, 0.5 + theta;
      return std::make_pair(a, b);
    });
  }
  if (name == "rotation_shear_3x2") {
    const int n = int_field(obj, "n_nodes", 16);
    return EnsembleSpec::uniform(n, [](double theta) {
      Matrix a(3, 3), b(3, 2);
      a << 0.0, 1.0, 0.0,
          -1.0, 0.0, theta,
          0.0, -theta, -0.2;
      b << 1.0, 0.0,
          0.0, 1.0,
          theta, 0.5;
      return std::make_pair(a, b);
    });
  }
  bad("ensemble.family: unknown family '" + name + "'");
}

EnsembleSpec from_explicit_nodes(const json& obj) {
  const json& arr = obj["nodes"];
  if (!arr.is_array() || arr.empty()) bad("ensemble.nodes: expected a non-empty array");
  std::vector<EnsembleNode> nodes;
  nodes.reserve(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& nj = arr[i];
    const std::string where = "ensemble.nodes[" + std::to_string(i) + "]";
    if (!nj.is_object()) bad(where + ": expected an object");
    for (const char* key : {"theta", "weight", "A", "B"})
      if (!nj.contains(key)) bad(where + "." + key + ": missing");
    if (!nj["theta"].is_number() || !nj["weight"].is_number())
      bad(where + ": theta and weight must be numbers");
    EnsembleNode node;
    node.theta = nj["theta"].get<double>();
    node.weight = nj["weight"].get<double>();
    node.a = parse_matrix(nj["A"], where + ".A");
    node.b = parse_matrix(nj["B"], where + ".B");
    nodes.push_back(std::move(node));
  }
  const int d = static_cast<int>(nodes[0].a.rows());
  const int m = static_cast<int>(nodes[0].b.cols());
  return EnsembleSpec(d, m, std::move(nodes));
}

}  // namespace

std::vector<std::string> family_names() {
  return {"brownian",         "scalar_theta_drift", "shifted_drift",
          "rank_deficient_input", "double_integrator",  "rotation_shear_3x2"};
}

EnsembleSpec ensemble_from_json(const std::string& json_text) {
  json obj = json::parse(json_text, nullptr, false);
  if (obj.is_discarded()) bad("ensemble: malformed JSON");
  if (!obj.is_object()) bad("ensemble: expected a JSON object");
  const bool named = obj.contains("family");
  const bool explicit_nodes = obj.contains("nodes");
  if (named == explicit_nodes)
    bad("ensemble: give exactly one of 'family' or 'nodes'");
  if (named && !obj["family"].is_string()) bad("ensemble.family: expected a string");
  return named ? from_named_family(obj) : from_explicit_nodes(obj);
}

}  // namespace ebridge
