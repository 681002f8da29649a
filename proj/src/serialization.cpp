#include "stokesopt/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "stokesopt/error.hpp"

namespace stokesopt {

namespace {

using nlohmann::json;

const json& require_field(const json& doc, const char* key) {
  if (!doc.is_object()) throw ParseError("document: expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string(key) + ": missing field");
  return *it;
}

int parse_dimension(const json& doc) {
  const json& n = require_field(doc, "n");
  if (!n.is_number_integer()) throw ParseError("n: expected an integer");
  const int v = n.get<int>();
  if (v < 2) throw ParseError("n: must be at least 2");
  return v;
}

json states_to_json(const CMatrix& states) {
  json vectors = json::array();
  for (int c = 0; c < states.cols(); ++c) {
    json v = json::array();
    for (int r = 0; r < states.rows(); ++r) v.push_back({states(r, c).real(), states(r, c).imag()});
    vectors.push_back(std::move(v));
  }
  return vectors;
}

CMatrix states_from_json(const json& doc, int n, int expected) {
  const json& vectors = require_field(doc, "vectors");
  if (!vectors.is_array()) throw ParseError("vectors: expected an array");
  if (static_cast<int>(vectors.size()) != expected)
    throw ParseError("vectors: expected " + std::to_string(expected) + " states, found " +
                     std::to_string(vectors.size()));
  CMatrix states(n, expected);
  for (int c = 0; c < expected; ++c) {
    const std::string where = "vectors[" + std::to_string(c) + "]";
    const json& v = vectors[c];
    if (!v.is_array() || static_cast<int>(v.size()) != n)
      throw ParseError(where + ": expected " + std::to_string(n) + " amplitudes");
    for (int r = 0; r < n; ++r) {
      const json& z = v[r];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
        throw ParseError(where + "[" + std::to_string(r) + "]: expected [re, im] pair");
      states(r, c) = cplx(z[0].get<double>(), z[1].get<double>());
    }
    const double norm = states.col(c).norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kLoadNormTolerance)
      throw ParseError(where + ": state is not unit-norm");
    // Rounding-level deviations are left alone so written sets reload bit-exactly.
    if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) states.col(c) /= norm;
  }
  return states;
}

json meta_from(const json& doc) {
  auto it = doc.find("meta");
  if (it == doc.end()) return json::object();
  if (!it->is_object()) throw ParseError("meta: expected an object");
  return *it;
}

}  // namespace

json launch_set_to_json(const LaunchSet& set) {
  return json{{"n", set.n()}, {"family", family_name(set.family())}, {"meta", set.meta()},
              {"vectors", states_to_json(set.states())}};
}

json simplex_set_to_json(const SimplexSet& set) {
  return json{{"n", set.n()}, {"family", family_name(Family::kSimplex)}, {"meta", set.meta()},
              {"vectors", states_to_json(set.states())}};
}

LaunchSet launch_set_from_json(const json& doc) {
  const int n = parse_dimension(doc);
  const json& fam = require_field(doc, "family");
  if (!fam.is_string()) throw ParseError("family: expected a string");
  const Family family = family_from_name(fam.get<std::string>());
  if (family == Family::kSimplex) throw ParseError("family: simplex documents are not launch sets");
  CMatrix states = states_from_json(doc, n, stokes_dim(n));
  try {
    return LaunchSet(std::move(states), family, meta_from(doc));
  } catch (const InvalidDimension& e) {
    throw ParseError(std::string("vectors: ") + e.what());
  }
}

SimplexSet simplex_set_from_json(const json& doc) {
  const int n = parse_dimension(doc);
  CMatrix states = states_from_json(doc, n, n);
  try {
    return SimplexSet(std::move(states), meta_from(doc));
  } catch (const InvalidDimension& e) {
    throw ParseError(std::string("vectors: ") + e.what());
  }
}

json metrics_to_json(const SetMetrics& m) {
  json sv = json::array();
  for (int i = 0; i < m.singular_values.size(); ++i) sv.push_back(m.singular_values[i]);
  return json{{"xi", m.xi},
              {"penalty_linear", m.penalty_linear},
              {"penalty_db", m.penalty_db},
              {"condition_number", m.condition_number},
              {"log_volume", m.log_volume},
              {"bound_ok", m.bound_ok},
              {"singular_values", sv}};
}

json run_summary_to_json(const StartSummary& s) {
  json j{{"index", s.index},           {"seed", s.seed},
         {"ok", s.ok},                 {"initial_xi", s.initial_xi},
         {"final_xi", s.final_xi},     {"final_penalty_db", s.final_penalty_db},
         {"iterations_used", s.iterations_used}, {"converged", s.converged},
         {"stop_reason", stop_reason_name(s.stop_reason)}};
  if (!s.ok) j["error"] = s.error;
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

LaunchSet read_launch_set(const std::filesystem::path& path) {
  try {
    return launch_set_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw ParseError(path.string() + ": " + what);
  }
}

void write_launch_set(const std::filesystem::path& path, const LaunchSet& set) {
  write_json_file(path, launch_set_to_json(set));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sweep_csv_header() { return "n,family,xi,penalty_db,condition_number,log_volume"; }

std::string sweep_csv_row(int n, const std::string& family, double xi, double penalty_db, double condition_number,
                          double log_volume) {
  return std::to_string(n) + "," + family + "," + format_double(xi) + "," + format_double(penalty_db) + "," +
         format_double(condition_number) + "," + format_double(log_volume);
}

std::string trajectory_csv(const std::vector<TrajectorySample>& samples) {
  std::string out = "iter,xi,grad_norm\n";
  for (const auto& s : samples)
    out += std::to_string(s.iter) + "," + format_double(s.xi) + "," + format_double(s.grad_norm) + "\n";
  return out;
}

}  // namespace stokesopt
