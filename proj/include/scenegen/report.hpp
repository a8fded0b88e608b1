#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/json_io.hpp"
#include "scenegen/metrics.hpp"
#include "scenegen/parallel.hpp"

namespace scenegen {

struct EvaluationConfig {
  std::vector<int> n_targets;
  std::vector<double> taus{0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  double agent_radius = 0.3;
  double cell = 0.05;
  std::map<std::string, double> min_thresholds;  // keyed by summary metric name
  std::map<std::string, double> max_thresholds;

  void validate() const {
    if (!(agent_radius >= 0.0) || !(cell > 0.0)) throw InvalidArgument("agent_radius must be >= 0 and cell > 0");
    for (double t : taus)
      if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("walkable thresholds must lie in [0, 1]");
    for (int n : n_targets)
      if (n < 0) throw InvalidArgument("quantity targets must be >= 0");
  }
};

struct NamedScene {
  std::string name;
  SceneLayout scene;
};

struct GraphPair {
  std::string name;
  RoomGraph gen;
  RoomGraph gt;
};

struct SceneMetrics {
  std::string name;
  int occupied = 0;
  double r_acoll = 0.0;
  double r_walkable = 0.0;
  double r_walkable_raster = 0.0;
  double col_obj = 0.0;
  double r_reach = 0.0;
};

struct GraphMetrics {
  std::string name;
  double s_node = 0.0;
  double s_constraint = 0.0;
  double s_edge = 0.0;
  bool exhaustive = true;
};

struct MetricReport {
  std::vector<SceneMetrics> scenes;
  std::vector<GraphMetrics> graphs;
  std::map<std::string, double> summary;  // means over scenes / graph pairs, plus ckl
  std::map<int, double> sr_quantity;
  std::map<double, double> sr_walkable;
};

inline std::string format_tau(double tau) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", tau);
  return buf;
}

/// Scene metrics are computed per scene on the worker pool; aggregation runs
/// in input order so the report does not depend on the worker count.
inline MetricReport evaluate_corpus(const std::vector<NamedScene>& scenes, const std::map<std::string, FloorPlan>& plans,
                                    const AssetCatalog& catalog, const std::vector<NamedScene>* reference,
                                    const std::vector<GraphPair>& graphs, const EvaluationConfig& cfg, int workers = 1) {
  cfg.validate();
  MetricReport rep;
  std::vector<const FloorPlan*> plan_of(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    auto it = plans.find(scenes[i].scene.floorplan_id);
    if (it == plans.end())
      throw InvalidArgument("scene '" + scenes[i].name + "' references unknown floorplan_id '" +
                            scenes[i].scene.floorplan_id + "'");
    plan_of[i] = &it->second;
  }
  rep.scenes.resize(scenes.size());
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    const SceneLayout& s = scenes[i].scene;
    SceneMetrics& m = rep.scenes[i];
    m.name = scenes[i].name;
    m.occupied = static_cast<int>(s.occupied_count());
    m.r_acoll = r_acoll(s, catalog);
    m.r_walkable = walkable_ratio_naive(s, *plan_of[i]);
    m.r_walkable_raster = walkable_ratio_raster(s, *plan_of[i], cfg.cell);
    m.col_obj = col_obj(s);
    m.r_reach = r_reach(s, *plan_of[i], cfg.agent_radius, cfg.cell);
  });

  if (!scenes.empty()) {
    double acoll = 0, walk = 0, walk_r = 0, col = 0, reach = 0;
    for (const auto& m : rep.scenes) {
      acoll += m.r_acoll;
      walk += m.r_walkable;
      walk_r += m.r_walkable_raster;
      col += m.col_obj;
      reach += m.r_reach;
    }
    const double n = static_cast<double>(scenes.size());
    rep.summary["r_acoll"] = acoll / n;
    rep.summary["r_walkable"] = walk / n;
    rep.summary["r_walkable_raster"] = walk_r / n;
    rep.summary["col_obj"] = col / n;
    rep.summary["r_reach"] = reach / n;

    std::vector<SceneLayout> layouts;
    for (const auto& s : scenes) layouts.push_back(s.scene);
    for (int t : cfg.n_targets) rep.sr_quantity[t] = sr_quantity(layouts, t);
    for (double tau : cfg.taus) rep.sr_walkable[tau] = sr_walkable(layouts, plan_of, tau);
    if (reference && !reference->empty()) {
      std::vector<SceneLayout> ref;
      for (const auto& s : *reference) ref.push_back(s.scene);
      rep.summary["ckl"] = ckl(layouts, ref, catalog.num_classes());
    }
  }

  for (const auto& g : graphs) {
    const NodeScore ns = s_node(g.gen, g.gt);
    rep.graphs.push_back({g.name, ns.score, s_constraint(g.gen, g.gt), s_edge(g.gen, g.gt, ns.matching),
                          ns.matching.exhaustive});
  }
  if (!rep.graphs.empty()) {
    double sn = 0, sc = 0, se = 0;
    for (const auto& g : rep.graphs) {
      sn += g.s_node;
      sc += g.s_constraint;
      se += g.s_edge;
    }
    const double n = static_cast<double>(rep.graphs.size());
    rep.summary["s_node"] = sn / n;
    rep.summary["s_constraint"] = sc / n;
    rep.summary["s_edge"] = se / n;
  }
  return rep;
}

/// Names of thresholds the report fails. Unknown metric names are a config error.
inline std::vector<std::string> threshold_failures(const MetricReport& rep, const EvaluationConfig& cfg) {
  std::vector<std::string> failed;
  auto lookup = [&](const std::string& key) {
    auto it = rep.summary.find(key);
    if (it == rep.summary.end()) throw InvalidArgument("threshold on unavailable metric '" + key + "'");
    return it->second;
  };
  for (const auto& [k, v] : cfg.min_thresholds)
    if (lookup(k) < v) failed.push_back(k + " < " + std::to_string(v));
  for (const auto& [k, v] : cfg.max_thresholds)
    if (lookup(k) > v) failed.push_back(k + " > " + std::to_string(v));
  return failed;
}

inline nlohmann::json to_json(const MetricReport& rep) {
  using nlohmann::json;
  json scenes = json::array();
  for (const auto& m : rep.scenes)
    scenes.push_back({{"name", m.name},
                      {"occupied", m.occupied},
                      {"r_acoll", m.r_acoll},
                      {"r_walkable", m.r_walkable},
                      {"r_walkable_raster", m.r_walkable_raster},
                      {"col_obj", m.col_obj},
                      {"r_reach", m.r_reach}});
  json graphs = json::array();
  for (const auto& g : rep.graphs)
    graphs.push_back({{"name", g.name},
                      {"s_node", g.s_node},
                      {"s_constraint", g.s_constraint},
                      {"s_edge", g.s_edge},
                      {"matching", g.exhaustive ? "exhaustive" : "greedy"}});
  json srq = json::object();
  for (const auto& [n, v] : rep.sr_quantity) srq[std::to_string(n)] = v;
  json srw = json::object();
  for (const auto& [t, v] : rep.sr_walkable) srw[format_tau(t)] = v;
  return {{"summary", rep.summary}, {"sr_quantity", srq}, {"sr_walkable", srw}, {"scenes", scenes}, {"graphs", graphs}};
}

/// Per-scene rows; summary metrics follow as `name,value` lines after a blank line.
inline std::string to_csv(const MetricReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "scene,occupied,r_acoll,r_walkable,r_walkable_raster,col_obj,r_reach\n";
  for (const auto& m : rep.scenes)
    os << m.name << ',' << m.occupied << ',' << m.r_acoll << ',' << m.r_walkable << ',' << m.r_walkable_raster << ','
       << m.col_obj << ',' << m.r_reach << '\n';
  os << "\nmetric,value\n";
  for (const auto& [k, v] : rep.summary) os << k << ',' << v << '\n';
  for (const auto& [n, v] : rep.sr_quantity) os << "sr_quantity_" << n << ',' << v << '\n';
  for (const auto& [t, v] : rep.sr_walkable) os << "sr_walkable_" << format_tau(t) << ',' << v << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Directory loading

/// Sorted *.json files in a directory.
inline std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InvalidArgument("not a directory: '" + dir.string() + "'");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<NamedScene> load_scene_dir(const std::filesystem::path& dir) {
  std::vector<NamedScene> out;
  for (const auto& p : json_files(dir)) {
    const auto j = read_json_file(p);
    if (!j.contains("slots")) continue;  // manifests and other side files
    out.push_back({p.stem().string(), scene_from_json(j)});
  }
  return out;
}

inline std::map<std::string, FloorPlan> load_plans(const std::filesystem::path& path) {
  std::map<std::string, FloorPlan> plans;
  const auto files = std::filesystem::is_directory(path) ? json_files(path) : std::vector<std::filesystem::path>{path};
  for (const auto& p : files) {
    FloorPlan fp = floorplan_from_json(read_json_file(p), p.stem().string());
    const std::string id = fp.id;
    plans.emplace(id, std::move(fp));
  }
  return plans;
}

/// Pairs `<name>.json` in gen_dir with the same name in gt_dir. Either file
/// may be a room graph or a floor plan.
inline std::vector<GraphPair> load_graph_pairs(const std::filesystem::path& gen_dir, const std::filesystem::path& gt_dir) {
  auto read_graph = [](const std::filesystem::path& p) {
    const auto j = read_json_file(p);
    return j.contains("nodes") ? room_graph_from_json(j) : room_graph(floorplan_from_json(j));
  };
  std::vector<GraphPair> out;
  for (const auto& p : json_files(gen_dir)) {
    const auto gt = gt_dir / p.filename();
    if (!std::filesystem::exists(gt)) throw InvalidArgument("no ground-truth graph for '" + p.filename().string() + "'");
    out.push_back({p.stem().string(), read_graph(p), read_graph(gt)});
  }
  return out;
}

}  // namespace scenegen
