#pragma once

// File formats: JSON multiplier and kernel files in, CSV + JSON reports out.
// Complex numbers are [re, im] pairs; matrices are row lists.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include <json.hpp>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"
#include "opmult/schur.hpp"
#include "opmult/tensorrep.hpp"

namespace opmult {

using json = nlohmann::json;

struct MultiplierFile {
  enum class Kind { Schur, TensorSum };
  Kind kind = Kind::Schur;
  CTensor schur;              // kind == Schur
  ElementaryTensorSum terms;  // kind == TensorSum

  Dims dims() const {
    return kind == Kind::Schur ? tensor_dims(schur) : terms.dims();
  }
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ParseError, field + ": " + what);
}

inline double parse_real(const json& j, const std::string& field) {
  if (!j.is_number()) parse_fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(field, "NaN or infinite value");
  return v;
}

inline cplx parse_complex(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) parse_fail(field, "expected [re, im]");
  return {parse_real(j[0], field + "[0]"), parse_real(j[1], field + "[1]")};
}

inline CMatrix parse_matrix(const json& j, const std::string& field, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array() || j.empty()) parse_fail(field, "expected a non-empty list of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) parse_fail(field + "[0]", "expected a non-empty row");
  const auto c = static_cast<Eigen::Index>(j[0].size());
  if (rows >= 0 && (r != rows || c != cols))
    parse_fail(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " + std::to_string(r) +
                          "x" + std::to_string(c));
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const std::string rf = field + "[" + std::to_string(i) + "]";
    const json& row = j[std::size_t(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) parse_fail(rf, "ragged row");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = parse_complex(row[std::size_t(k)], rf + "[" + std::to_string(k) + "]");
  }
  return m;
}

inline void parse_nested(const json& j, const std::vector<std::size_t>& dims, std::size_t level,
                         const std::string& field, std::vector<cplx>& out) {
  if (level == dims.size()) {
    out.push_back(parse_complex(j, field));
    return;
  }
  if (!j.is_array() || j.size() != dims[level])
    parse_fail(field, "expected " + std::to_string(dims[level]) + " entries along axis " + std::to_string(level));
  for (std::size_t i = 0; i < j.size(); ++i)
    parse_nested(j[i], dims, level + 1, field + "[" + std::to_string(i) + "]", out);
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json nested_json(const CTensor& t, std::size_t level, std::size_t& flat) {
  if (level == t.rank()) return complex_json(t.data()[flat++]);
  json arr = json::array();
  for (std::size_t i = 0; i < t.dims()[level]; ++i) arr.push_back(nested_json(t, level + 1, flat));
  return arr;
}

}  // namespace detail

inline MultiplierFile parse_multiplier(const json& doc) {
  using detail::parse_fail;
  if (!doc.is_object()) parse_fail("document", "expected a JSON object");
  if (!doc.contains("kind") || !doc["kind"].is_string()) parse_fail("kind", "missing or not a string");
  const std::string kind = doc["kind"].get<std::string>();
  if (kind != "schur" && kind != "tensor_sum") parse_fail("kind", "must be \"schur\" or \"tensor_sum\", got \"" + kind + "\"");
  if (!doc.contains("dims") || !doc["dims"].is_array()) parse_fail("dims", "missing or not a list");
  const json& jd = doc["dims"];
  if (jd.size() < 2) parse_fail("dims", "need at least 2 legs");
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < jd.size(); ++i) {
    const std::string f = "dims[" + std::to_string(i) + "]";
    if (!jd[i].is_number_integer() || jd[i].get<long long>() < 1) parse_fail(f, "must be a positive integer");
    dims.push_back(jd[i].get<std::size_t>());
  }
  MultiplierFile mf;
  if (kind == "schur") {
    mf.kind = MultiplierFile::Kind::Schur;
    if (!doc.contains("values")) parse_fail("values", "missing");
    std::vector<cplx> data;
    detail::parse_nested(doc["values"], dims, 0, "values", data);
    mf.schur = CTensor(dims, std::move(data));
    return mf;
  }
  mf.kind = MultiplierFile::Kind::TensorSum;
  Dims d(dims.begin(), dims.end());
  mf.terms = ElementaryTensorSum(d);
  if (!doc.contains("terms") || !doc["terms"].is_array()) parse_fail("terms", "missing or not a list");
  const json& jt = doc["terms"];
  for (std::size_t t = 0; t < jt.size(); ++t) {
    const std::string tf = "terms[" + std::to_string(t) + "]";
    if (!jt[t].is_object() || !jt[t].contains("factors") || !jt[t]["factors"].is_array())
      parse_fail(tf + ".factors", "missing or not a list");
    const json& jf = jt[t]["factors"];
    if (jf.size() != d.size())
      parse_fail(tf + ".factors", "expected " + std::to_string(d.size()) + " factors, got " + std::to_string(jf.size()));
    ElementaryTensorSum::Term term;
    for (std::size_t i = 0; i < jf.size(); ++i)
      term.push_back(detail::parse_matrix(jf[i], tf + ".factors[" + std::to_string(i) + "]", d[i], d[i]));
    mf.terms.add_term(std::move(term));
  }
  return mf;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {  // syntax errors and number overflow
    throw Error(ErrorKind::ParseError, source + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline MultiplierFile load_multiplier(const std::string& path) {
  return parse_multiplier(parse_json_text(read_file(path), path));
}

/// Canonical form: fixed key order, two-space indent, trailing newline.
inline std::string serialize_multiplier(const MultiplierFile& mf) {
  json doc = json::object();
  const Dims d = mf.dims();
  doc["kind"] = mf.kind == MultiplierFile::Kind::Schur ? "schur" : "tensor_sum";
  doc["dims"] = json::array();
  for (auto x : d) doc["dims"].push_back(x);
  if (mf.kind == MultiplierFile::Kind::Schur) {
    std::size_t flat = 0;
    doc["values"] = detail::nested_json(mf.schur, 0, flat);
  } else {
    json terms = json::array();
    for (const auto& t : mf.terms.terms()) {
      json fs = json::array();
      for (const auto& f : t) fs.push_back(detail::matrix_json(f));
      terms.push_back(json{{"factors", fs}});
    }
    doc["terms"] = terms;
  }
  return doc.dump(2) + "\n";
}

/// {"kernels": [matrix, ...]}
inline KernelTuple parse_kernels(const json& doc) {
  using detail::parse_fail;
  if (!doc.is_object() || !doc.contains("kernels") || !doc["kernels"].is_array())
    parse_fail("kernels", "missing or not a list");
  KernelTuple ts;
  const json& jk = doc["kernels"];
  for (std::size_t i = 0; i < jk.size(); ++i)
    ts.kernels.push_back(detail::parse_matrix(jk[i], "kernels[" + std::to_string(i) + "]"));
  return ts;
}

inline std::string serialize_kernels(const KernelTuple& ts) {
  json doc;
  doc["kernels"] = json::array();
  for (const auto& k : ts.kernels) doc["kernels"].push_back(detail::matrix_json(k));
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Reports.

/// 12 significant digits.
inline std::string fmt12(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// JSON number rounded to 12 significant digits; null when not finite.
inline json num12(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::strtod(fmt12(x).c_str(), nullptr);
}

struct Report {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  json summary = json::object();

  void add_row(std::vector<std::string> row) {
    require(row.size() == header.size(), ErrorKind::InvalidArgument, "report row width differs from header");
    rows.push_back(std::move(row));
  }

  std::string csv() const {
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + quote(cells[i]);
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  std::string json_text() const { return summary.dump(2) + "\n"; }
};

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(bool(out), ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    require(bool(out), ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::InvalidArgument, "cannot rename into " + path + ": " + ec.message());
  }
}

/// CSV to `path` and the JSON summary to `path`.json; both to stdout without a path.
inline void emit_report(const Report& r, const std::string& path, std::ostream& out = std::cout) {
  if (path.empty()) {
    out << r.csv() << r.json_text();
    return;
  }
  write_atomic(path, r.csv());
  write_atomic(path + ".json", r.json_text());
}

}  // namespace opmult
