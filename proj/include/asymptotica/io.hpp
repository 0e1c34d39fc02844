#pragma once

// JSON file formats. Complex numbers are [re, im] pairs of doubles; matrices
// are arrays of rows. Parsing uses nlohmann/json; writing goes through
// dump_json17, which prints every floating-point number with 17 significant
// digits.
//
// Channel file:
//   {"dim": d, "repr": "kraus"|"super"|"choi",
//    "picture": "schrodinger"|"heisenberg", "data": ...}
//   kraus: list of d x d matrices describing the Schrodinger action
//          rho -> sum K rho K^dag, whatever the channel's picture is;
//   super: the d^2 x d^2 matrix of the map in its own picture under
//          column-stacking vectorization;
//   choi:  the reshuffle of that superoperator.
//
// Unfold spec file:
//   {"blocks": [{"d1":., "d2": .}], "h1_dim": ., "perm": [.], (0-based)
//    "unitaries": [matrix], "transient_map": matrix|null,
//    "rho": [matrix]|null, "seed": n}
//   transient_map columns follow vec() order of the block factor: column
//   a_off(k) + alpha + beta*d1 is the image of E_{alpha beta} (x) I_{d2,k}.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "asymptotica/channel.hpp"
#include "asymptotica/unfolder.hpp"

namespace asymptotica {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Writing with fixed float formatting.

namespace detail {

inline void dump_json17(const Json& j, std::ostream& os, int indent,
                        int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in << Json(it.key()).dump() << ": ";
        dump_json17(it.value(), os, indent, depth + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in;
        dump_json17(v, os, indent, depth + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {  // vacuous margins (e.g. empty H1) are null
        os << "null";
        return;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf;
      return;
    }
    default:
      os << j.dump();
      return;
  }
}

} // namespace detail

inline std::string dump_json17(const Json& j, int indent = 1) {
  std::ostringstream os;
  detail::dump_json17(j, os, indent, 0);
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Matrices.

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json matrix_to_json(const CMat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw IoError("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline CMat matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw IoError("expected a matrix (array of rows)");
  const auto rows = j.size();
  const auto cols = j[0].size();
  CMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw IoError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          complex_from_json(j[i][c]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Channel files.

inline Json channel_to_json(const Channel& c, const std::string& repr = "super") {
  Json j;
  j["dim"] = c.dim();
  j["repr"] = repr;
  j["picture"] = picture_name(c.picture());
  if (repr == "super") {
    j["data"] = matrix_to_json(c.superop());
  } else if (repr == "choi") {
    j["data"] = matrix_to_json(c.choi());
  } else if (repr == "kraus") {
    Json ops = Json::array();
    const auto ks = c.kraus() ? *c.kraus() : c.kraus_from_choi();
    for (const auto& k : ks) ops.push_back(matrix_to_json(k));
    j["data"] = std::move(ops);
  } else {
    throw IoError("channel_to_json: unknown repr '" + repr + "'");
  }
  return j;
}

inline Channel channel_from_json(const Json& j, const Tolerances& tol = {}) {
  if (!j.is_object()) throw IoError("channel file: expected an object");
  for (const char* key : {"dim", "repr", "picture", "data"})
    if (!j.contains(key))
      throw IoError(std::string("channel file: missing key '") + key + "'");
  const int d = j["dim"].get<int>();
  if (d < 1) throw IoError("channel file: dim must be >= 1");
  const std::string repr = j["repr"].get<std::string>();
  const std::string pic_s = j["picture"].get<std::string>();
  Picture pic;
  if (pic_s == "schrodinger")
    pic = Picture::Schrodinger;
  else if (pic_s == "heisenberg")
    pic = Picture::Heisenberg;
  else
    throw IoError("channel file: picture must be schrodinger|heisenberg");
  try {
    if (repr == "kraus") {
      if (!j["data"].is_array() || j["data"].empty())
        throw IoError("channel file: kraus data must be a non-empty list");
      std::vector<CMat> ops;
      for (const auto& k : j["data"]) {
        CMat m = matrix_from_json(k);
        if (m.rows() != d || m.cols() != d)
          throw IoError("channel file: Kraus operator is not d x d");
        ops.push_back(std::move(m));
      }
      return Channel::from_kraus(ops, pic, tol);
    }
    CMat m = matrix_from_json(j["data"]);
    if (m.rows() != Eigen::Index(d) * d || m.cols() != Eigen::Index(d) * d)
      throw IoError("channel file: data matrix is not d^2 x d^2");
    if (repr == "super") return Channel::from_superop(std::move(m), pic, tol);
    if (repr == "choi") return Channel::from_choi(m, pic, tol);
    throw IoError("channel file: repr must be kraus|super|choi");
  } catch (const DimensionError& e) {
    throw IoError(std::string("channel file: ") + e.what());
  } catch (const ValidationError& e) {
    throw IoError(std::string("channel file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Unfold spec files.

inline Json unfold_spec_to_json(const UnfoldSpec& spec) {
  Json j;
  Json blocks = Json::array();
  for (const auto& b : spec.blocks)
    blocks.push_back(Json{{"d1", b.d1}, {"d2", b.d2}});
  j["blocks"] = std::move(blocks);
  j["h1_dim"] = spec.h1_dim;
  j["perm"] = spec.permutation;
  Json us = Json::array();
  for (const auto& u : spec.unitaries) us.push_back(matrix_to_json(u));
  j["unitaries"] = std::move(us);
  if (spec.h1_dim > 0)
    j["transient_map"] = matrix_to_json(spec.transient_map);
  else
    j["transient_map"] = nullptr;
  if (spec.rho.empty()) {
    j["rho"] = nullptr;
  } else {
    Json rs = Json::array();
    for (const auto& r : spec.rho) rs.push_back(matrix_to_json(r));
    j["rho"] = std::move(rs);
  }
  j["seed"] = spec.seed;
  return j;
}

inline UnfoldSpec unfold_spec_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("unfold spec: expected an object");
  for (const char* key : {"blocks", "h1_dim", "perm", "unitaries"})
    if (!j.contains(key))
      throw IoError(std::string("unfold spec: missing key '") + key + "'");
  UnfoldSpec spec;
  for (const auto& b : j["blocks"]) {
    if (!b.contains("d1") || !b.contains("d2"))
      throw IoError("unfold spec: block needs d1 and d2");
    spec.blocks.push_back({b["d1"].get<int>(), b["d2"].get<int>()});
  }
  spec.h1_dim = j["h1_dim"].get<int>();
  for (const auto& p : j["perm"]) spec.permutation.push_back(p.get<int>());
  for (const auto& u : j["unitaries"])
    spec.unitaries.push_back(matrix_from_json(u));
  if (j.contains("transient_map") && !j["transient_map"].is_null())
    spec.transient_map = matrix_from_json(j["transient_map"]);
  if (j.contains("rho") && !j["rho"].is_null())
    for (const auto& r : j["rho"]) spec.rho.push_back(matrix_from_json(r));
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  try {
    validate_spec(spec);
  } catch (const ValidationError& e) {
    throw IoError(std::string("unfold spec: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Ground-truth sidecar written by `synthesize`, consumed by `roundtrip`.

inline Json ground_truth_to_json(const GroundTruth& truth) {
  Json j;
  j["spec"] = unfold_spec_to_json(truth.spec);
  j["p_p"] = matrix_to_json(truth.p_p);
  if (truth.spec.h1_dim > 0)
    j["p11_full"] = matrix_to_json(truth.p11_full);
  else
    j["p11_full"] = nullptr;
  Json ab = Json::array();
  for (const auto& a : truth.attr_basis) ab.push_back(matrix_to_json(a));
  j["attr_basis"] = std::move(ab);
  Json ps = Json::array();
  for (Eigen::Index i = 0; i < truth.peripheral_spectrum.size(); ++i)
    ps.push_back(complex_to_json(truth.peripheral_spectrum(i)));
  j["peripheral_spectrum"] = std::move(ps);
  return j;
}

inline GroundTruth ground_truth_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("spec"))
    throw IoError("ground truth: expected an object with a spec");
  GroundTruth truth;
  truth.spec = unfold_spec_from_json(j["spec"]);
  truth.p_p = matrix_from_json(j.at("p_p"));
  const int r = truth.spec.h0_dim();
  truth.p11_full = truth.spec.h1_dim == 0 ? CMat::Zero(0, r * r)
                                          : matrix_from_json(j.at("p11_full"));
  for (const auto& a : j.at("attr_basis"))
    truth.attr_basis.push_back(matrix_from_json(a));
  const auto& ps = j.at("peripheral_spectrum");
  truth.peripheral_spectrum = CVec(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    truth.peripheral_spectrum(static_cast<Eigen::Index>(i)) =
        complex_from_json(ps[i]);
  return truth;
}

// ---------------------------------------------------------------------------
// Files.

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in '" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
}

// FNV-1a digest of the raw file bytes, for report provenance.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

} // namespace asymptotica
