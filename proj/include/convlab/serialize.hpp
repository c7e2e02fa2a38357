#pragma once

// Structured-text serialization of a LatticeDistribution:
// {"offset": ..., "step": ..., "weights": [...], "dropped_mass": ...}.
// Doubles are written with 17 significant digits so a read-back is
// bit-faithful.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "convlab/lattice.hpp"

namespace convlab {

class ParseError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string to_json_string(const LatticeDistribution& dist) {
  std::ostringstream out;
  out << "{\"offset\": " << format_double(dist.offset())
      << ", \"step\": " << format_double(dist.step())
      << ", \"dropped_mass\": " << format_double(dist.dropped_mass())
      << ", \"weights\": [";
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (i) out << ", ";
    out << format_double(dist.weights()[i]);
  }
  out << "]}";
  return out.str();
}

inline LatticeDistribution distribution_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("offset") || !j.contains("step") ||
      !j.contains("weights"))
    throw ParseError("distribution object needs offset, step and weights");
  if (!j["weights"].is_array() || j["weights"].empty())
    throw ParseError("weights must be a non-empty array");
  std::vector<double> w;
  w.reserve(j["weights"].size());
  for (const auto& v : j["weights"]) {
    if (!v.is_number()) throw ParseError("weights must be numbers");
    w.push_back(v.get<double>());
  }
  const double dropped = j.value("dropped_mass", 0.0);
  try {
    // trim floor 0 keeps the stored weights bit-identical on round trip
    return LatticeDistribution(j["offset"].get<double>(), j["step"].get<double>(),
                               std::move(w), dropped, 0.0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid distribution: ") + e.what());
  }
}

inline LatticeDistribution parse_distribution(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed distribution text: ") + e.what());
  }
  return distribution_from_json(j);
}

inline LatticeDistribution read_distribution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open distribution file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_distribution(buf.str());
}

inline void write_distribution(const LatticeDistribution& dist,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write distribution file: " + path);
  out << to_json_string(dist) << "\n";
}

}  // namespace convlab
