#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmiopt/affine.hpp"
#include "bmiopt/catalog.hpp"
#include "bmiopt/control.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/pole_placement.hpp"

namespace bmiopt {

using nlohmann::json;

/// Parses a JSON document from disk; parse failures carry the file path and
/// the byte-position diagnostics of the underlying parser.
inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("io: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw StructuralError("io: parse error in '" + path + "': " + e.what());
  }
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw StructuralError("io: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

/// Reads a dense matrix written as an array of equal-length rows of finite
/// numbers.  The field name is only used in diagnostics.
inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw StructuralError("io: matrix '" + field + "' must be an array of rows");
  const std::size_t rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array())
    throw StructuralError("io: matrix '" + field + "' must be an array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw StructuralError("io: matrix '" + field + "' row " + std::to_string(r) +
                            " has inconsistent length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw StructuralError("io: matrix '" + field + "' entry (" + std::to_string(r) +
                              ", " + std::to_string(c) + ") is not a number");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

inline json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<Eigen::MatrixXd> matrix_list_from_json(const json& j,
                                                          const std::string& field) {
  if (!j.is_array())
    throw StructuralError("io: '" + field + "' must be an array of matrices");
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

// ---------------------------------------------------------------------------
// Plant files.
// ---------------------------------------------------------------------------

/// Builds a PlantModel from its JSON object.  A, B and C are required; B1,
/// C1, D11 and D12 default to zero blocks whose sizes are inferred from the
/// present data (absent disturbance/performance channels get zero width).
inline PlantModel plant_from_json(const json& j) {
  PlantModel p;
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  if (!j.contains("A")) throw StructuralError("io: plant: A required");
  p.A = matrix_from_json(j.at("A"), "A");
  const Eigen::Index n = p.A.rows();
  if (!j.contains("B")) throw StructuralError("io: plant: B required");
  p.B = matrix_from_json(j.at("B"), "B");
  if (!j.contains("C")) throw StructuralError("io: plant: C required for output feedback");
  p.C = matrix_from_json(j.at("C"), "C");

  p.B1 = j.contains("B1") ? matrix_from_json(j.at("B1"), "B1") : Eigen::MatrixXd(n, 0);
  p.C1 = j.contains("C1") ? matrix_from_json(j.at("C1"), "C1") : Eigen::MatrixXd(0, n);
  p.D11 = j.contains("D11") ? matrix_from_json(j.at("D11"), "D11")
                            : Eigen::MatrixXd::Zero(p.C1.rows(), p.B1.cols()).eval();
  p.D12 = j.contains("D12") ? matrix_from_json(j.at("D12"), "D12")
                            : Eigen::MatrixXd::Zero(p.C1.rows(), p.B.cols()).eval();
  p.validate();
  return p;
}

inline PlantModel load_plant(const std::string& path) {
  return plant_from_json(load_json_file(path));
}

inline json plant_to_json(const PlantModel& p) {
  json j;
  j["name"] = p.name;
  j["A"] = matrix_to_json(p.A);
  j["B1"] = matrix_to_json(p.B1);
  j["B"] = matrix_to_json(p.B);
  j["C1"] = matrix_to_json(p.C1);
  j["C"] = matrix_to_json(p.C);
  j["D11"] = matrix_to_json(p.D11);
  j["D12"] = matrix_to_json(p.D12);
  return j;
}

inline void save_plant(const std::string& path, const PlantModel& p) {
  save_json_file(path, plant_to_json(p));
}

// ---------------------------------------------------------------------------
// Affine constraint slices.
// ---------------------------------------------------------------------------

/// Reads an affine block-diagonal map from
///   {"variables": [{"name", "kind": "scalar"|"symmetric", "order"}...],
///    "blocks": [{"constant": [[..]], "terms": [{"index", "coeff": [[..]]}...]}...]}
/// Slot offsets follow the listed variable order; term indices address packed
/// slots directly.
inline AffineMatrixFunction amf_from_json(const json& j) {
  AffineMatrixFunction f;
  int dim = 0;
  if (j.contains("variables")) {
    for (const auto& v : j.at("variables")) {
      InternalVarSpec spec;
      spec.name = v.at("name").get<std::string>();
      const std::string kind = v.at("kind").get<std::string>();
      if (kind == "scalar") {
        spec.kind = InternalVarSpec::kScalar;
        spec.order = 1;
      } else if (kind == "symmetric") {
        spec.kind = InternalVarSpec::kSymmetric;
        spec.order = v.at("order").get<int>();
      } else {
        throw StructuralError("io: variable kind must be 'scalar' or 'symmetric'");
      }
      spec.offset = dim;
      dim += spec.slot_count();
      f.structure.push_back(std::move(spec));
    }
  }
  f.internal_dim = dim;
  if (!j.contains("blocks"))
    throw StructuralError("io: affine map needs a 'blocks' array");
  for (const auto& bj : j.at("blocks")) {
    AffineBlock blk;
    blk.constant = matrix_from_json(bj.at("constant"), "constant");
    if (bj.contains("terms")) {
      for (const auto& tj : bj.at("terms")) {
        AffineTerm t;
        t.index = tj.at("index").get<int>();
        t.coeff = matrix_from_json(tj.at("coeff"), "coeff");
        blk.terms.push_back(std::move(t));
      }
    }
    f.blocks.push_back(std::move(blk));
  }
  f.canonicalize();
  return f;
}

inline json amf_to_json(const AffineMatrixFunction& f) {
  json j;
  j["variables"] = json::array();
  for (const auto& v : f.structure) {
    json vj;
    vj["name"] = v.name;
    vj["kind"] = v.kind == InternalVarSpec::kScalar ? "scalar" : "symmetric";
    vj["order"] = v.order;
    j["variables"].push_back(std::move(vj));
  }
  j["blocks"] = json::array();
  for (const auto& b : f.blocks) {
    json bj;
    bj["constant"] = matrix_to_json(b.constant);
    bj["terms"] = json::array();
    for (const auto& t : b.terms) {
      json tj;
      tj["index"] = t.index;
      tj["coeff"] = matrix_to_json(t.coeff);
      bj["terms"].push_back(std::move(tj));
    }
    j["blocks"].push_back(std::move(bj));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Pole-placement task files and gain files.
// ---------------------------------------------------------------------------

/// Reads {"A", "B", "C", "targets": [[re, im]...], "q0": [..] (optional)}.
inline PolePlacementTask pole_task_from_json(const json& j) {
  PolePlacementTask task;
  task.A = matrix_from_json(j.at("A"), "A");
  task.B = matrix_from_json(j.at("B"), "B");
  task.C = matrix_from_json(j.at("C"), "C");
  if (!j.contains("targets")) throw StructuralError("io: pole task: targets required");
  const auto& tj = j.at("targets");
  task.targets.resize(static_cast<Eigen::Index>(tj.size()));
  for (std::size_t i = 0; i < tj.size(); ++i) {
    if (!tj[i].is_array() || tj[i].size() != 2)
      throw StructuralError("io: pole task: each target must be a [re, im] pair");
    task.targets[static_cast<Eigen::Index>(i)] = {tj[i][0].get<double>(),
                                                  tj[i][1].get<double>()};
  }
  const int nq = task.gain_rows() * task.gain_cols();
  task.q0 = Eigen::VectorXd::Zero(nq);
  if (j.contains("q0")) {
    const auto& qj = j.at("q0");
    if (!qj.is_array() || static_cast<int>(qj.size()) != nq)
      throw StructuralError("io: pole task: q0 length must equal gain entry count");
    for (int i = 0; i < nq; ++i) task.q0[i] = qj[static_cast<std::size_t>(i)].get<double>();
  }
  task.validate();
  return task;
}

/// Reads a gain matrix from either a bare array of rows or {"F": [[..]]}.
inline Eigen::MatrixXd gain_from_json(const json& j) {
  if (j.is_array()) return matrix_from_json(j, "F");
  if (j.contains("F")) return matrix_from_json(j.at("F"), "F");
  throw StructuralError("io: gain file must be a matrix or contain key 'F'");
}

// ---------------------------------------------------------------------------
// Catalog data files.
// ---------------------------------------------------------------------------

inline StabilityTestData stability_test_data_from_json(const json& j) {
  StabilityTestData d;
  d.A = matrix_list_from_json(j.at("A"), "A");
  if (j.contains("mu")) d.mu = j.at("mu").get<double>();
  if (j.contains("tau_bound")) d.tau_bound = j.at("tau_bound").get<double>();
  return d;
}

inline PerturbedStabilizationData perturbed_stabilization_data_from_json(const json& j) {
  PerturbedStabilizationData d;
  d.A = matrix_list_from_json(j.at("A"), "A");
  d.B = matrix_list_from_json(j.at("B"), "B");
  if (j.contains("mu")) d.mu = j.at("mu").get<double>();
  if (j.contains("tau_bound")) d.tau_bound = j.at("tau_bound").get<double>();
  if (j.contains("gain_bound")) d.gain_bound = j.at("gain_bound").get<double>();
  return d;
}

inline SimultaneousStabilizationData simultaneous_stabilization_data_from_json(const json& j) {
  SimultaneousStabilizationData d;
  d.A = matrix_list_from_json(j.at("A"), "A");
  d.B = matrix_list_from_json(j.at("B"), "B");
  if (j.contains("rate_bound")) d.rate_bound = j.at("rate_bound").get<double>();
  return d;
}

inline ObserverDesignData observer_design_data_from_json(const json& j) {
  ObserverDesignData d;
  d.A = matrix_list_from_json(j.at("A"), "A");
  d.B2 = matrix_list_from_json(j.at("B2"), "B2");
  d.C1 = matrix_list_from_json(j.at("C1"), "C1");
  d.C2 = matrix_list_from_json(j.at("C2"), "C2");
  d.B1 = matrix_from_json(j.at("B1"), "B1");
  if (j.contains("gamma")) d.gamma = j.at("gamma").get<double>();
  if (j.contains("gain_bound")) d.gain_bound = j.at("gain_bound").get<double>();
  return d;
}

// ---------------------------------------------------------------------------
// CSV primitives: comma separators, '.' decimal point, LF line endings,
// 17 significant digits for reals.
// ---------------------------------------------------------------------------

inline std::string csv_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw StructuralError("io: cannot write '" + path + "'");
  out << csv_join(header) << "\n";
  for (const auto& r : rows) out << csv_join(r) << "\n";
}

/// Minimal reader for the CSV files this library writes (no quoting).
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("io: cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace bmiopt
