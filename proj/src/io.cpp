#include "pmcbs/io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pmcbs {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

Cell cell_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw std::runtime_error(std::string(what) + ": expected [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

json parse_or_throw(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(std::string(what) + ": not valid JSON");
  return j;
}

}  // namespace

std::vector<AgentSpec> parse_agents_json(const std::string& text) {
  const json j = parse_or_throw(text, "agents");
  if (!j.is_array()) throw std::runtime_error("agents: expected a JSON list");
  std::vector<AgentSpec> out;
  std::set<int> seen;
  for (const json& e : j) {
    if (!e.is_object() || !e.contains("id") || !e.contains("start") || !e.contains("goal"))
      throw std::runtime_error("agents: each entry needs id, start and goal");
    AgentSpec a;
    a.id = e.at("id").get<int>();
    a.start = cell_from_json(e.at("start"), "agents start");
    a.goal = cell_from_json(e.at("goal"), "agents goal");
    if (!seen.insert(a.id).second) throw std::runtime_error("agents: duplicate id");
    out.push_back(a);
  }
  return out;
}

std::string agents_to_json(const std::vector<AgentSpec>& agents) {
  ordered j = ordered::array();
  for (const AgentSpec& a : agents) {
    ordered e;
    e["id"] = a.id;
    e["start"] = {a.start.x, a.start.y};
    e["goal"] = {a.goal.x, a.goal.y};
    j.push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string solution_to_json(const SolutionDoc& doc) {
  ordered j;
  j["method"] = doc.method;
  j["status"] = doc.status;
  j["cost"] = doc.cost;
  j["expanded_nodes"] = doc.expanded_nodes;
  j["elapsed_ms"] = doc.elapsed_ms;
  ordered agents = ordered::array();
  const std::size_t n = doc.agent_ids.size();
  for (std::size_t a = 0; a < n; ++a) {
    ordered e;
    e["id"] = doc.agent_ids[a];
    ordered visits = ordered::array();
    if (doc.is_grid()) {
      if (a < doc.grid_paths.size()) {
        const DiscretePath& p = doc.grid_paths[a];
        for (std::size_t k = 0; k < p.cells.size(); ++k) {
          ordered v;
          v["cell"] = {p.cells[k].x, p.cells[k].y};
          v["entry"] = static_cast<double>(k);
          if (k + 1 < p.cells.size())
            v["exit"] = static_cast<double>(k + 1);
          else
            v["exit"] = nullptr;
          visits.push_back(v);
        }
      }
    } else if (a < doc.pm_paths.size()) {
      const TimedPath& p = doc.pm_paths[a];
      for (const RegionVisit& rv : p.visits) {
        ordered v;
        v["region"] = rv.region;
        v["entry"] = rv.entry;
        if (rv.exit == kInf)
          v["exit"] = nullptr;
        else
          v["exit"] = rv.exit;
        ordered wps = ordered::array();
        for (const Cell& c : rv.waypoints) wps.push_back({c.x, c.y});
        v["waypoints"] = wps;
        visits.push_back(v);
      }
    }
    e["visits"] = visits;
    agents.push_back(e);
  }
  j["agents"] = agents;
  return j.dump(2) + "\n";
}

SolutionDoc parse_solution_json(const std::string& text) {
  const json j = parse_or_throw(text, "solution");
  if (!j.is_object()) throw std::runtime_error("solution: expected a JSON object");
  SolutionDoc doc;
  try {
    doc.method = j.at("method").get<std::string>();
    doc.status = j.at("status").get<std::string>();
    doc.cost = j.at("cost").get<double>();
    doc.expanded_nodes = j.at("expanded_nodes").get<long long>();
    doc.elapsed_ms = j.at("elapsed_ms").get<double>();
    for (const json& e : j.at("agents")) {
      doc.agent_ids.push_back(e.at("id").get<int>());
      if (doc.is_grid()) {
        DiscretePath p;
        for (const json& v : e.at("visits"))
          p.cells.push_back(cell_from_json(v.at("cell"), "solution cell"));
        doc.grid_paths.push_back(std::move(p));
      } else {
        TimedPath p;
        p.agent = e.at("id").get<int>();
        for (const json& v : e.at("visits")) {
          RegionVisit rv;
          rv.region = v.at("region").get<int>();
          rv.entry = v.at("entry").get<double>();
          rv.exit = v.at("exit").is_null() ? kInf : v.at("exit").get<double>();
          for (const json& w : v.at("waypoints"))
            rv.waypoints.push_back(cell_from_json(w, "solution waypoint"));
          p.visits.push_back(std::move(rv));
        }
        if (!p.visits.empty()) p.arrival_time = p.visits.back().entry;
        doc.pm_paths.push_back(std::move(p));
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("solution: ") + e.what());
  }
  return doc;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace pmcbs
