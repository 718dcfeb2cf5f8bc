#pragma once

// JSON documents for problems, trials and plan results; CSV for aggregates.
// Infinite costs are written as null.

#include "bitstar/bench/harness.hpp"
#include "bitstar/bench/scenarios.hpp"
#include "bitstar/planner/bitstar.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitstar {

using Json = nlohmann::json;

/// Raised for malformed documents; the message names the offending field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError((where.empty() ? "" : where + ".") + key + ": missing");
  return *it;
}

inline StateVec read_vector(const Json& j, std::size_t n, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of numbers");
  if (n != 0 && j.size() != n) {
    throw FormatError(where + ": expected " + std::to_string(n) + " numbers, got " +
                      std::to_string(j.size()));
  }
  StateVec x(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(where + "[" + std::to_string(i) + "]: expected a number");
    x[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return x;
}

inline Json write_vector(const StateVec& x) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) j.push_back(x[i]);
  return j;
}

inline Json write_cost(double c) { return std::isfinite(c) ? Json(c) : Json(nullptr); }

inline double read_cost(const Json& j, const std::string& where) {
  if (j.is_null()) return kInfinity;
  if (!j.is_number()) throw FormatError(where + ": expected a number or null");
  return j.get<double>();
}

inline AxisBox read_box(const Json& j, std::size_t n, const std::string& where) {
  StateVec lo = read_vector(field(j, "lower", where), n, where + ".lower");
  StateVec hi = read_vector(field(j, "upper", where), n, where + ".upper");
  try {
    return AxisBox(std::move(lo), std::move(hi));
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline Json write_box(const AxisBox& b) {
  return Json{{"lower", write_vector(b.lower)}, {"upper", write_vector(b.upper)}};
}

}  // namespace io_detail

inline Json scenario_to_json(const Scenario& s) {
  const ProblemDef& p = s.problem;
  Json obstacles = Json::array();
  for (const auto& b : p.obstacles()) obstacles.push_back(io_detail::write_box(b));
  Json goals = Json::array();
  for (const auto& g : p.goals()) goals.push_back(io_detail::write_vector(g));
  Json j{{"name", s.name},
         {"family", family_name(s.family)},
         {"dimension", p.dimension()},
         {"bounds", io_detail::write_box(p.bounds())},
         {"obstacles", std::move(obstacles)},
         {"start", io_detail::write_vector(p.start())},
         {"goals", std::move(goals)}};
  if (s.family == ScenarioFamily::kRandomWorld) j["world_seed"] = s.world_seed;
  return j;
}

inline Scenario scenario_from_json(const Json& j) {
  using io_detail::field;
  if (!j.is_object()) throw FormatError("problem: expected an object");
  const Json& dim = field(j, "dimension", "");
  if (!dim.is_number_integer() || dim.get<long long>() < 1) {
    throw FormatError("dimension: expected a positive integer");
  }
  const auto n = static_cast<std::size_t>(dim.get<long long>());
  AxisBox bounds = io_detail::read_box(field(j, "bounds", ""), n, "bounds");
  std::vector<AxisBox> obstacles;
  if (auto it = j.find("obstacles"); it != j.end()) {
    if (!it->is_array()) throw FormatError("obstacles: expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      obstacles.push_back(io_detail::read_box((*it)[k], n, "obstacles[" + std::to_string(k) + "]"));
    }
  }
  StateVec start = io_detail::read_vector(field(j, "start", ""), n, "start");
  const Json& goals_json = field(j, "goals", "");
  if (!goals_json.is_array()) throw FormatError("goals: expected an array of states");
  std::vector<StateVec> goals;
  for (std::size_t k = 0; k < goals_json.size(); ++k) {
    goals.push_back(io_detail::read_vector(goals_json[k], n, "goals[" + std::to_string(k) + "]"));
  }
  Scenario s{"custom", ScenarioFamily::kCustom, 0,
             [&]() {
               try {
                 return ProblemDef(std::move(bounds), std::move(obstacles), std::move(start),
                                   std::move(goals));
               } catch (const std::invalid_argument& e) {
                 throw FormatError(e.what());
               }
             }()};
  if (auto it = j.find("name"); it != j.end() && it->is_string()) s.name = it->get<std::string>();
  if (auto it = j.find("family"); it != j.end() && it->is_string()) {
    try {
      s.family = parse_family(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  if (auto it = j.find("world_seed"); it != j.end() && it->is_number_unsigned()) {
    s.world_seed = it->get<std::uint64_t>();
  }
  return s;
}

inline Json counters_to_json(const Counters& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

inline Json path_to_json(const std::vector<StateVec>& path) {
  Json j = Json::array();
  for (const auto& x : path) j.push_back(io_detail::write_vector(x));
  return j;
}

inline std::vector<StateVec> path_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of states");
  std::vector<StateVec> path;
  for (std::size_t i = 0; i < j.size(); ++i) {
    path.push_back(io_detail::read_vector(j[i], 0, where + "[" + std::to_string(i) + "]"));
  }
  return path;
}

inline Json trial_to_json(const TrialRecord& t) {
  Json events = Json::array();
  for (const auto& e : t.events) {
    events.push_back({{"time_s", e.time_s}, {"cost", io_detail::write_cost(e.cost)}, {"waypoints", e.waypoints}});
  }
  return Json{{"planner", t.planner},
              {"seed", t.seed},
              {"solved", t.solved},
              {"cost", io_detail::write_cost(t.cost)},
              {"events", std::move(events)},
              {"path", path_to_json(t.path)},
              {"counters", counters_to_json(t.counters)}};
}

inline TrialRecord trial_from_json(const Json& j) {
  using io_detail::field;
  TrialRecord t;
  const Json& planner = field(j, "planner", "");
  if (!planner.is_string()) throw FormatError("planner: expected a string");
  t.planner = planner.get<std::string>();
  const Json& seed = field(j, "seed", "");
  if (!seed.is_number_unsigned()) throw FormatError("seed: expected a non-negative integer");
  t.seed = seed.get<std::uint64_t>();
  const Json& solved = field(j, "solved", "");
  if (!solved.is_boolean()) throw FormatError("solved: expected a boolean");
  t.solved = solved.get<bool>();
  t.cost = io_detail::read_cost(field(j, "cost", ""), "cost");
  const Json& events = field(j, "events", "");
  if (!events.is_array()) throw FormatError("events: expected an array");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string where = "events[" + std::to_string(i) + "]";
    TrialEvent e;
    const Json& time = field(events[i], "time_s", where);
    if (!time.is_number()) throw FormatError(where + ".time_s: expected a number");
    e.time_s = time.get<double>();
    e.cost = io_detail::read_cost(field(events[i], "cost", where), where + ".cost");
    const Json& wp = field(events[i], "waypoints", where);
    if (!wp.is_number_unsigned()) throw FormatError(where + ".waypoints: expected a count");
    e.waypoints = wp.get<std::size_t>();
    t.events.push_back(e);
  }
  t.path = path_from_json(field(j, "path", ""), "path");
  const Json& counters = field(j, "counters", "");
  if (!counters.is_object()) throw FormatError("counters: expected an object");
  for (auto it = counters.begin(); it != counters.end(); ++it) {
    if (!it.value().is_number_unsigned()) throw FormatError("counters." + it.key() + ": expected a count");
    t.counters[it.key()] = it.value().get<std::uint64_t>();
  }
  return t;
}

inline Json tree_to_json(const std::vector<TreeNode>& tree) {
  Json j = Json::array();
  for (const auto& node : tree) {
    j.push_back({{"state", io_detail::write_vector(node.state)},
                 {"parent", node.parent},
                 {"cost_to_come", node.cost_to_come},
                 {"goal", node.is_goal}});
  }
  return j;
}

/// Columns: time, median_cost, ci_lo, ci_hi, success_fraction. Infinite
/// values are written as "inf".
inline std::string aggregate_to_csv(const AggregateSeries& a) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "time,median_cost,ci_lo,ci_hi,success_fraction\n";
  auto cell = [&](double v) {
    if (std::isinf(v)) {
      out << "inf";
    } else {
      out << v;
    }
  };
  for (std::size_t i = 0; i < a.time.size(); ++i) {
    cell(a.time[i]);
    out << ',';
    cell(a.median[i]);
    out << ',';
    cell(a.ci_lo[i]);
    out << ',';
    cell(a.ci_hi[i]);
    out << ',';
    cell(a.success[i]);
    out << '\n';
  }
  return out.str();
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": not valid JSON (" + e.what() + ")");
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write file");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace bitstar
