#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "birkhoff/model.hpp"

namespace birkhoff::io {

using Json = nlohmann::json;

// Complex numbers travel as [re, im]; doubles print with 17 significant
// digits, so values round-trip bit for bit.
inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const std::vector<Complex>& v) {
  Json out = Json::array();
  for (Complex z : v) out.push_back(to_json(z));
  return out;
}

/// A bare number is read as a real value; otherwise [re, im] is required.
inline Complex complex_at(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw spec_error("expected [re, im]", path);
  const Complex z{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw spec_error("non-finite value", path);
  return z;
}

inline const Json& field(const Json& obj, const char* key, const std::string& path) {
  const std::string here = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) throw spec_error("expected an object", path.empty() ? "$" : path);
  const auto it = obj.find(key);
  if (it == obj.end()) throw spec_error("missing field", here);
  return *it;
}

inline CMatrix matrix_at(const Json& j, int n, const std::string& path) {
  if (!j.is_array()) throw spec_error("expected an array of rows", path);
  if (static_cast<int>(j.size()) != n)
    throw spec_error("row count " + std::to_string(j.size()) + " != order " + std::to_string(n), path);
  CMatrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw spec_error("expected " + std::to_string(n) + " entries", rp);
    for (int c = 0; c < n; ++c)
      m(r, c) = complex_at(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

/// Builds and validates a BvpSpec. Every error names the offending field.
inline BvpSpec parse_spec(const Json& doc) {
  BvpSpec spec;
  if (!doc.is_object()) throw spec_error("expected an object", "$");
  if (const auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_string()) throw spec_error("expected a string", "label");
    spec.label = it->get<std::string>();
  }
  const Json& order = field(doc, "order", "");
  if (!order.is_number_integer() || order.get<int>() < 1) throw spec_error("expected an integer >= 1", "order");
  const int n = order.get<int>();
  spec.expression = DifferentialExpression(n);

  if (const auto it = doc.find("coefficients"); it != doc.end()) {
    if (!it->is_array()) throw spec_error("expected an array", "coefficients");
    std::vector<bool> seen(static_cast<std::size_t>(std::max(n - 1, 0)), false);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string cp = "coefficients[" + std::to_string(i) + "]";
      const Json& c = (*it)[i];
      const Json& k = field(c, "k", cp);
      if (!k.is_number_integer() || k.get<int>() < 0 || k.get<int>() > n - 2)
        throw spec_error("k must lie in 0..n-2", cp + ".k");
      const auto slot = static_cast<std::size_t>(k.get<int>());
      if (seen[slot]) throw spec_error("duplicate coefficient slot", cp + ".k");
      seen[slot] = true;
      const Json& kind = field(c, "kind", cp);
      const Json& values = field(c, "values", cp);
      if (!values.is_array()) throw spec_error("expected an array", cp + ".values");
      std::vector<Complex> v;
      for (std::size_t q = 0; q < values.size(); ++q)
        v.push_back(complex_at(values[q], cp + ".values[" + std::to_string(q) + "]"));
      if (kind == "poly") {
        spec.expression.set(k.get<int>(), Coefficient::poly(std::move(v)));
      } else if (kind == "samples") {
        if (v.size() < 2) throw spec_error("sample table needs at least 2 values", cp + ".values");
        spec.expression.set(k.get<int>(), Coefficient::samples(std::move(v)));
      } else {
        throw spec_error("kind must be \"poly\" or \"samples\"", cp + ".kind");
      }
    }
  }

  const Json& boundary = field(doc, "boundary", "");
  spec.boundary.a = matrix_at(field(boundary, "a", "boundary"), n, "boundary.a");
  spec.boundary.b = matrix_at(field(boundary, "b", "boundary"), n, "boundary.b");
  validate(spec);
  return spec;
}

inline BvpSpec parse_spec_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw spec_error(std::string("malformed JSON: ") + e.what(), "$");
  }
  return parse_spec(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw spec_error("cannot open file '" + path + "'", "spec");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BvpSpec load_spec(const std::string& path) { return parse_spec_text(read_file(path)); }

inline Json to_json(const BvpSpec& spec) {
  Json doc;
  doc["label"] = spec.label;
  doc["order"] = spec.expression.order();
  Json coeffs = Json::array();
  const auto& cs = spec.expression.coefficients();
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (cs[k].is_zero()) continue;
    coeffs.push_back({{"k", k},
                      {"kind", cs[k].kind() == Coefficient::Kind::Poly ? "poly" : "samples"},
                      {"values", to_json(cs[k].values())}});
  }
  doc["coefficients"] = std::move(coeffs);
  doc["boundary"] = {{"a", to_json(spec.boundary.a)}, {"b", to_json(spec.boundary.b)}};
  return doc;
}

namespace detail {

inline bool has_object(const Json& j) {
  if (j.is_object()) return true;
  if (j.is_array())
    for (const auto& e : j)
      if (has_object(e)) return true;
  return false;
}

inline std::string one_line(const Json& j) {
  if (!j.is_array()) return j.dump();
  std::string out = "[";
  for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ", " : "") + one_line(j[i]);
  return out + "]";
}

inline void pretty(std::string& out, const Json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  if (j.is_object() && !j.empty()) {
    out += "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out += pad + Json(it.key()).dump() + ": ";
      pretty(out, it.value(), depth + 1);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += close + "}";
    return;
  }
  if (j.is_array() && !j.empty()) {
    const std::string line = one_line(j);
    if (!has_object(j) && line.size() + 2 * static_cast<std::size_t>(depth) <= 100) {
      out += line;
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out += pad;
      pretty(out, j[i], depth + 1);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += close + "]";
    return;
  }
  out += one_line(j);
}

}  // namespace detail

/// Indented JSON that keeps short arrays without objects on one line, so a
/// complex value reads as [re, im] and a small matrix row fits a line.
inline std::string pretty(const Json& j) {
  std::string out;
  detail::pretty(out, j, 0);
  return out + "\n";
}

}  // namespace birkhoff::io
