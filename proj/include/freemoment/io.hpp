#pragma once

// JSON and CSV serialization. Words are written with 1-based letters.

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "freemoment/error.hpp"
#include "freemoment/measure1d.hpp"
#include "freemoment/nc_series.hpp"
#include "freemoment/trace_table.hpp"

namespace freemoment::io {

using json = nlohmann::json;

namespace io_detail {
[[noreturn]] inline void fail(const std::string& msg) { throw Error(ErrorCode::invalid_input, "io", msg); }

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("field '") + key + "' has the wrong type");
  }
}
}  // namespace io_detail

inline json word_to_json(const Word& w) {
  json a = json::array();
  for (int l : w.letters()) a.push_back(l + 1);
  return a;
}

inline Word word_from_json(const json& j, int n, int max_len) {
  if (!j.is_array()) io_detail::fail("word must be an array of variable indices");
  if (static_cast<int>(j.size()) > max_len) io_detail::fail("word is longer than the degree cap");
  Word w;
  for (const auto& x : j) {
    if (!x.is_number_integer()) io_detail::fail("word letters must be integers");
    const int l = x.get<int>();
    if (l < 1 || l > n) io_detail::fail("word letter " + std::to_string(l) + " outside 1.." + std::to_string(n));
    w.push_back(l - 1);
  }
  return w;
}

inline json series_to_json(const NCSeries& f) {
  json terms = json::array();
  for (const auto& [w, c] : f.terms()) terms.push_back({{"word", word_to_json(w)}, {"coeff", c}});
  return {{"n_vars", f.n_vars()}, {"max_degree", f.max_degree()}, {"terms", terms}};
}

inline NCSeries series_from_json(const json& j) {
  const int n = io_detail::field<int>(j, "n_vars");
  const int D = io_detail::field<int>(j, "max_degree");
  NCSeries f(n, D);
  for (const auto& t : io_detail::field<json>(j, "terms")) {
    const double c = io_detail::field<double>(t, "coeff");
    f.add_term(word_from_json(io_detail::field<json>(t, "word"), n, D), c);
  }
  return f;
}

inline json tensor_to_json(const TensorSeries& t) {
  json terms = json::array();
  for (const auto& [k, c] : t.terms())
    terms.push_back({{"left", word_to_json(k.first)}, {"right", word_to_json(k.second)}, {"coeff", c}});
  return {{"n_vars", t.n_vars()}, {"max_degree", t.max_degree()}, {"terms", terms}};
}

inline TensorSeries tensor_from_json(const json& j) {
  const int n = io_detail::field<int>(j, "n_vars");
  const int D = io_detail::field<int>(j, "max_degree");
  TensorSeries t(n, D);
  for (const auto& x : io_detail::field<json>(j, "terms")) {
    const double c = io_detail::field<double>(x, "coeff");
    t.add_term(word_from_json(io_detail::field<json>(x, "left"), n, D),
               word_from_json(io_detail::field<json>(x, "right"), n, D), c);
  }
  return t;
}

inline json trace_to_json(const TraceTable& t) {
  json values = json::array();
  for (std::size_t id = 0; id < t.class_count(); ++id)
    values.push_back({{"word", word_to_json(t.representative(id))}, {"value", t.value(id)}});
  return {{"n_vars", t.n_vars()}, {"degree_cap", t.degree_cap()}, {"cutoff", t.cutoff()}, {"values", values}};
}

inline TraceTable trace_from_json(const json& j) {
  const int n = io_detail::field<int>(j, "n_vars");
  const int cap = io_detail::field<int>(j, "degree_cap");
  TraceTable t(n, cap, io_detail::field<double>(j, "cutoff"));
  for (const auto& v : io_detail::field<json>(j, "values")) {
    const Word w = word_from_json(io_detail::field<json>(v, "word"), n, cap);
    if (!(t.representative(t.class_of(w)) == w)) io_detail::fail("trace words must be canonical representatives");
    t.set(w, io_detail::field<double>(v, "value"));
  }
  return t;
}

/// Continuous part as nodes/density plus its cdf, atoms as [x, mass] pairs.
inline json measure_to_json(const GridMeasure& m) {
  const auto s = m.samples();
  const auto [a, b] = m.support();
  json atoms = json::array();
  for (const auto& [x, w] : m.atoms()) atoms.push_back({x, w});
  return {{"support", {a, b}}, {"nodes", s.nodes}, {"density", s.density}, {"cdf", s.cdf},
          {"atoms", atoms}, {"quantiles", m.quantiles()}};
}

inline GridMeasure measure_from_json(const json& j) {
  const auto nodes = j.contains("nodes") ? io_detail::field<std::vector<double>>(j, "nodes") : std::vector<double>{};
  const auto density =
      j.contains("density") ? io_detail::field<std::vector<double>>(j, "density") : std::vector<double>{};
  const auto cdf = j.contains("cdf") ? io_detail::field<std::vector<double>>(j, "cdf") : std::vector<double>{};
  std::vector<std::pair<double, double>> atoms;
  if (j.contains("atoms")) {
    for (const auto& a : io_detail::field<json>(j, "atoms")) {
      if (!a.is_array() || a.size() != 2) io_detail::fail("atoms must be [x, mass] pairs");
      atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
  }
  GridMeasure m;
  if (nodes.empty()) {
    if (atoms.empty()) io_detail::fail("measure has neither density nor atoms");
    m = GridMeasure::from_atoms(atoms);
  } else {
    m = GridMeasure::from_samples(nodes, density, cdf, false, atoms);
  }
  if (j.contains("quantiles")) {
    auto q = io_detail::field<std::vector<double>>(j, "quantiles");
    if (q.size() == GridMeasure::kQuantileGrid) m.set_quantile_table(std::move(q));
  }
  return m;
}

inline std::string density_csv(const GridMeasure& m) {
  std::ostringstream out;
  out.precision(17);
  out << "nodes,density\n";
  const auto s = m.samples();
  for (std::size_t i = 0; i < s.nodes.size(); ++i) out << s.nodes[i] << ',' << s.density[i] << '\n';
  return out.str();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_detail::fail("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    io_detail::fail("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::internal, "io", "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::internal, "io", "failed writing '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace freemoment::io
