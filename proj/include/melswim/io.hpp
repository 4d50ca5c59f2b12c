#ifndef MELSWIM_IO_HPP
#define MELSWIM_IO_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "melswim/common.hpp"
#include "melswim/integrate.hpp"
#include "melswim/params.hpp"
#include "melswim/signal.hpp"
#include "melswim/state.hpp"

namespace melswim {

using json = nlohmann::json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(const std::string& data, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,y,theta,alpha,h_par,h_perp\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const State& z = traj.states[k];
    const Control u = traj.signal.eval(traj.times[k]);
    os << format_double(traj.times[k]) << ',' << format_double(z.x) << ','
       << format_double(z.y) << ',' << format_double(z.theta) << ','
       << format_double(z.alpha) << ',' << format_double(u.h_par) << ','
       << format_double(u.h_perp) << '\n';
  }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open for writing: " + path);
  write_trajectory_csv(f, traj);
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ParseError("csv column not found: " + name);
  }
};

inline CsvTable read_csv(std::istream& is, const std::string& origin = "<stream>") {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (lineno == 1) {
      table.columns = cells;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.columns.size()) + " cells, got " +
                       std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      const auto res = std::from_chars(b, e, row[i]);
      if (res.ec != std::errc{} || res.ptr != e)
        throw ParseError(origin + ":" + std::to_string(lineno) + ": bad number '" + cells[i] +
                         "'");
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw ParseError(origin + ": empty csv");
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open: " + path);
  return read_csv(f, path);
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const SwimmerParams& p) {
  j = json{{"l1", p.l1},     {"l2", p.l2},     {"xi1", p.xi1}, {"xi2", p.xi2},
           {"eta1", p.eta1}, {"eta2", p.eta2}, {"m1", p.m1},   {"m2", p.m2},
           {"kappa", p.kappa}};
}

inline void from_json(const json& j, SwimmerParams& p) {
  for (const char* key : {"l1", "l2", "xi1", "xi2", "eta1", "eta2", "m1", "m2", "kappa"})
    if (!j.contains(key)) throw ParseError(std::string("missing parameter field '") + key + "'");
  p.l1 = j.at("l1").get<double>();
  p.l2 = j.at("l2").get<double>();
  p.xi1 = j.at("xi1").get<double>();
  p.xi2 = j.at("xi2").get<double>();
  p.eta1 = j.at("eta1").get<double>();
  p.eta2 = j.at("eta2").get<double>();
  p.m1 = j.at("m1").get<double>();
  p.m2 = j.at("m2").get<double>();
  p.kappa = j.at("kappa").get<double>();
}

inline void to_json(json& j, const State& z) {
  j = json{{"x", z.x}, {"y", z.y}, {"theta", z.theta}, {"alpha", z.alpha}};
}

inline void from_json(const json& j, State& z) {
  for (const char* key : {"x", "y", "theta", "alpha"})
    if (!j.contains(key)) throw ParseError(std::string("missing state field '") + key + "'");
  z.x = j.at("x").get<double>();
  z.y = j.at("y").get<double>();
  z.theta = j.at("theta").get<double>();
  z.alpha = j.at("alpha").get<double>();
}

inline void to_json(json& j, const Control& u) {
  j = json::array({u.h_par, u.h_perp});
}

inline void from_json(const json& j, Control& u) {
  if (!j.is_array() || j.size() != 2) throw ParseError("control sample must be [h_par, h_perp]");
  u.h_par = j.at(0).get<double>();
  u.h_perp = j.at(1).get<double>();
}

inline void to_json(json& j, const ValidationReport& r) {
  j = json{{"positivity_ok", r.positivity_ok},
           {"moments_nonzero", r.moments_nonzero},
           {"anisotropy_present", r.anisotropy_present},
           {"normal_dominates", r.normal_dominates},
           {"moment_balance_nonzero", r.moment_balance_nonzero},
           {"moment_balance", r.moment_balance},
           {"straight_set_invariant", r.straight_set_invariant},
           {"isotropic_drag", r.isotropic_drag},
           {"assumption1_holds", r.assumption1_holds}};
}

inline void to_json(json& j, const ControlSignal& sig) {
  json bps = json::array();
  for (const double t : sig.breakpoints()) bps.push_back(t);
  switch (sig.kind()) {
    case ControlSignal::Kind::PiecewiseConstant: {
      json values = json::array();
      for (std::size_t i = 0; i < sig.segment_count(); ++i) values.push_back(sig.segment_left(i));
      j = json{{"kind", "piecewise-constant"}, {"breakpoints", bps}, {"values", values}};
      return;
    }
    case ControlSignal::Kind::SampledLinear: {
      json samples = json::array();
      for (std::size_t i = 0; i < sig.segment_count(); ++i) samples.push_back(sig.segment_left(i));
      samples.push_back(sig.segment_right(sig.segment_count() - 1));
      j = json{{"kind", "sampled-linear"}, {"breakpoints", bps}, {"samples", samples}};
      return;
    }
    case ControlSignal::Kind::Segments: {
      json left = json::array(), right = json::array();
      for (std::size_t i = 0; i < sig.segment_count(); ++i) {
        left.push_back(sig.segment_left(i));
        right.push_back(sig.segment_right(i));
      }
      j = json{{"kind", "segments"}, {"breakpoints", bps}, {"left", left}, {"right", right}};
      return;
    }
  }
}

inline void from_json(const json& j, ControlSignal& sig) {
  if (!j.contains("kind") || !j.contains("breakpoints"))
    throw ParseError("control signal needs 'kind' and 'breakpoints'");
  const std::string kind = j.at("kind").get<std::string>();
  const std::vector<double> bps = j.at("breakpoints").get<std::vector<double>>();
  if (kind == "piecewise-constant") {
    if (!j.contains("values")) throw ParseError("piecewise-constant signal needs 'values'");
    sig = ControlSignal::piecewise_constant(bps, j.at("values").get<std::vector<Control>>());
  } else if (kind == "sampled-linear") {
    if (!j.contains("samples")) throw ParseError("sampled-linear signal needs 'samples'");
    sig = ControlSignal::sampled_linear(bps, j.at("samples").get<std::vector<Control>>());
  } else if (kind == "segments") {
    if (!j.contains("left") || !j.contains("right"))
      throw ParseError("segments signal needs 'left' and 'right'");
    sig = ControlSignal::segments(bps, j.at("left").get<std::vector<Control>>(),
                                  j.at("right").get<std::vector<Control>>());
  } else {
    throw ParseError("unknown control signal kind '" + kind + "'");
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open: " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open for writing: " + path);
  f << j.dump(2) << '\n';
}

inline SwimmerParams params_from_json_file(const std::string& path) {
  try {
    return read_json_file(path).get<SwimmerParams>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace melswim

#endif  // MELSWIM_IO_HPP
