#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"

namespace scenegen {

struct RoomSpec {
  RoomType type = RoomType::kLiving;
  double target_ratio = 0.0;
};

struct AnnealSchedule {
  double initial_temp = 1.0;
  double cooling_rate = 0.995;
  int steps = 3000;
};

/// Knobs of the annealing floor-plan generator; what the prompt bridge fills in.
struct FloorplanParams {
  double total_area = 60.0;
  std::vector<RoomSpec> room_specs;
  std::vector<std::pair<RoomType, RoomType>> required_adjacencies;
  double squareness_weight = 1.0;
  double adjacency_weight = 5.0;
  double area_weight = 10.0;
  double count_weight = 5.0;
  AnnealSchedule anneal;
  double plan_aspect = 1.25;  // width / depth of the bounding rectangle

  void validate() const {
    if (!(total_area > 0.0) || !std::isfinite(total_area)) throw InvalidArgument("total_area must be positive");
    if (room_specs.empty()) throw InvalidArgument("at least one room is required");
    double sum = 0.0;
    for (const auto& r : room_specs) {
      if (r.target_ratio < 0.0 || !std::isfinite(r.target_ratio)) throw InvalidArgument("area ratios must be >= 0");
      sum += r.target_ratio;
    }
    if (sum > 1.05) throw InvalidArgument("area ratios sum above 1.05");
    for (double w : {squareness_weight, adjacency_weight, area_weight, count_weight})
      if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("reward weights must be finite and >= 0");
    if (!(anneal.cooling_rate > 0.0 && anneal.cooling_rate < 1.0)) throw InvalidArgument("cooling_rate must lie in (0,1)");
    if (anneal.steps < 0 || !(anneal.initial_temp > 0.0)) throw InvalidArgument("bad annealing schedule");
    if (!(plan_aspect > 0.0)) throw InvalidArgument("plan_aspect must be positive");
  }
};

/// Rooms realized as rectangles; index i of `types` and `rects` is room i.
struct RectLayout {
  std::vector<RoomType> types;
  std::vector<Rect2> rects;
};

inline constexpr double kMinDoorWidth = 0.8;
inline constexpr double kMinRoomArea = 4.0;

/// Pairs of rooms sharing a wall segment of at least kMinDoorWidth.
inline std::vector<std::pair<int, int>> shared_walls(const std::vector<Rect2>& rects, double min_len = kMinDoorWidth) {
  std::vector<std::pair<int, int>> out;
  constexpr double tol = 1e-9;
  for (int i = 0; i < static_cast<int>(rects.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(rects.size()); ++j) {
      const Rect2& a = rects[i];
      const Rect2& b = rects[j];
      double len = 0.0;
      if (std::abs(a.hi.x() - b.lo.x()) < tol || std::abs(b.hi.x() - a.lo.x()) < tol)
        len = std::min(a.hi.y(), b.hi.y()) - std::max(a.lo.y(), b.lo.y());
      else if (std::abs(a.hi.y() - b.lo.y()) < tol || std::abs(b.hi.y() - a.lo.y()) < tol)
        len = std::min(a.hi.x(), b.hi.x()) - std::max(a.lo.x(), b.lo.x());
      if (len >= min_len - tol) out.emplace_back(i, j);
    }
  }
  return out;
}

/// Breakdown of the layout energy (each term already weighted).
struct EnergyTerms {
  double area = 0.0;
  double count = 0.0;
  double adjacency = 0.0;
  double squareness = 0.0;
  double total() const { return area + count + adjacency + squareness; }
};

inline EnergyTerms layout_energy_terms(const RectLayout& layout, const FloorplanParams& params) {
  EnergyTerms e;
  double total = 0.0;
  for (const auto& r : layout.rects) total += r.area();

  std::map<RoomType, double> target, actual;
  std::map<RoomType, int> want, have;
  for (const auto& s : params.room_specs) {
    target[s.type] += s.target_ratio;
    ++want[s.type];
    actual[s.type] += 0.0;
    have[s.type] += 0;
  }
  for (std::size_t i = 0; i < layout.rects.size(); ++i) {
    actual[layout.types[i]] += total > 0.0 ? layout.rects[i].area() / total : 0.0;
    ++have[layout.types[i]];
  }
  for (const auto& [type, ratio] : actual) e.area += std::abs(ratio - (target.count(type) ? target.at(type) : 0.0));
  for (const auto& [type, n] : have) e.count += std::abs(n - (want.count(type) ? want.at(type) : 0));

  const auto walls = shared_walls(layout.rects);
  for (const auto& [a, b] : params.required_adjacencies) {
    bool ok = false;
    for (const auto& [i, j] : walls) {
      const RoomType ti = layout.types[i], tj = layout.types[j];
      if ((ti == a && tj == b) || (ti == b && tj == a)) {
        ok = true;
        break;
      }
    }
    e.adjacency += ok ? 0.0 : 1.0;
  }
  for (const auto& r : layout.rects) {
    const double lo = std::min(r.width(), r.depth());
    const double hi = std::max(r.width(), r.depth());
    const double aspect = lo > 0.0 ? hi / lo : 1e6;
    e.squareness += (aspect - 1.0) * (aspect - 1.0);
  }
  e.area *= params.area_weight;
  e.count *= params.count_weight;
  e.adjacency *= params.adjacency_weight;
  e.squareness *= params.squareness_weight;
  return e;
}

/// Weighted sum of the area, count, adjacency and squareness penalties (>= 0).
inline double layout_energy(const RectLayout& layout, const FloorplanParams& params) {
  return layout_energy_terms(layout, params).total();
}

/// Guillotine subdivision: leaves hold rooms, internal nodes a split ratio.
/// Each split cuts across the longer side of its rectangle.
struct SlicingTree {
  struct Node {
    int left = -1;
    int right = -1;
    int room = -1;
    double ratio = 0.5;
  };
  std::vector<Node> nodes;  // nodes[0] is the root
  std::vector<RoomType> types;

  std::vector<Rect2> realize(const Rect2& bounds) const {
    std::vector<Rect2> rects(types.size());
    split(0, bounds, rects);
    return rects;
  }

  RectLayout layout(const Rect2& bounds) const { return {types, realize(bounds)}; }

 private:
  void split(int n, const Rect2& r, std::vector<Rect2>& out) const {
    const Node& node = nodes[n];
    if (node.room >= 0) {
      out[node.room] = r;
      return;
    }
    Rect2 a = r, b = r;
    if (r.width() >= r.depth()) {
      const double x = r.lo.x() + node.ratio * r.width();
      a.hi.x() = x;
      b.lo.x() = x;
    } else {
      const double y = r.lo.y() + node.ratio * r.depth();
      a.hi.y() = y;
      b.lo.y() = y;
    }
    split(node.left, a, out);
    split(node.right, b, out);
  }
};

namespace detail {

inline int build_slicing(SlicingTree& tree, const std::vector<int>& rooms, const std::vector<double>& weight) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (rooms.size() == 1) {
    tree.nodes[id].room = rooms.front();
    return id;
  }
  double total = 0.0;
  for (int r : rooms) total += weight[r];
  std::size_t best = 1;
  double best_gap = 1e300, acc = 0.0;
  for (std::size_t k = 1; k < rooms.size(); ++k) {
    acc += weight[rooms[k - 1]];
    const double gap = std::abs(2.0 * acc - total);
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  double left_sum = 0.0;
  for (std::size_t k = 0; k < best; ++k) left_sum += weight[rooms[k]];
  const std::vector<int> l(rooms.begin(), rooms.begin() + static_cast<std::ptrdiff_t>(best));
  const std::vector<int> r(rooms.begin() + static_cast<std::ptrdiff_t>(best), rooms.end());
  const int li = build_slicing(tree, l, weight);
  const int ri = build_slicing(tree, r, weight);
  tree.nodes[id].left = li;
  tree.nodes[id].right = ri;
  tree.nodes[id].ratio = std::clamp(left_sum / total, 0.15, 0.85);
  return id;
}

}  // namespace detail

struct GeneratedFloorplan {
  FloorPlan plan;
  RoomGraph graph;
  double energy = 0.0;
};

inline FloorPlan to_floorplan(const RectLayout& layout, std::string id) {
  FloorPlan plan;
  plan.id = std::move(id);
  for (std::size_t i = 0; i < layout.rects.size(); ++i) {
    const Rect2& r = layout.rects[i];
    plan.rooms.push_back({std::to_string(i), layout.types[i],
                          {r.lo, Vec2(r.hi.x(), r.lo.y()), r.hi, Vec2(r.lo.x(), r.hi.y())}});
  }
  for (const auto& [a, b] : shared_walls(layout.rects)) plan.doors.emplace_back(std::to_string(a), std::to_string(b));
  return plan;
}

/// Simulated annealing over rectangular subdivisions of a total_area
/// rectangle. Moves: swap two rooms, shift a shared wall, retype a room.
/// Metropolis acceptance on layout_energy; the best layout seen is returned.
inline GeneratedFloorplan generate_floorplan(const FloorplanParams& params, std::uint64_t seed,
                                             std::string plan_id = "") {
  params.validate();
  const int n = static_cast<int>(params.room_specs.size());
  if (params.total_area / n < kMinRoomArea)
    throw InfeasibleError("total area " + std::to_string(params.total_area) + " m^2 cannot hold " +
                          std::to_string(n) + " rooms of at least " + std::to_string(kMinRoomArea) + " m^2");
  const double width = std::sqrt(params.total_area * params.plan_aspect);
  const Rect2 bounds{Vec2::Zero(), Vec2(width, params.total_area / width)};

  SlicingTree tree;
  std::vector<int> rooms(n);
  std::vector<double> weight(n);
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    rooms[i] = i;
    tree.types.push_back(params.room_specs[i].type);
    weight[i] = params.room_specs[i].target_ratio;
    wsum += weight[i];
  }
  if (!(wsum > 0.0)) std::fill(weight.begin(), weight.end(), 1.0);
  detail::build_slicing(tree, rooms, weight);

  std::vector<RoomType> palette;
  for (const auto& s : params.room_specs)
    if (std::find(palette.begin(), palette.end(), s.type) == palette.end()) palette.push_back(s.type);
  std::vector<int> internal;
  for (int i = 0; i < static_cast<int>(tree.nodes.size()); ++i)
    if (tree.nodes[i].room < 0) internal.push_back(i);
  std::vector<int> leaves;
  for (int i = 0; i < static_cast<int>(tree.nodes.size()); ++i)
    if (tree.nodes[i].room >= 0) leaves.push_back(i);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> wall_step(0.0, 0.08);

  double energy = layout_energy(tree.layout(bounds), params);
  SlicingTree best = tree;
  double best_energy = energy;
  double temp = params.anneal.initial_temp;
  for (int step = 0; step < params.anneal.steps && n > 1; ++step, temp *= params.anneal.cooling_rate) {
    SlicingTree cand = tree;
    const double pick = u01(rng);
    if (pick < 0.4 && !internal.empty()) {
      auto& node = cand.nodes[internal[std::uniform_int_distribution<std::size_t>(0, internal.size() - 1)(rng)]];
      node.ratio = std::clamp(node.ratio + wall_step(rng), 0.1, 0.9);
    } else if (pick < 0.8 || palette.size() < 2) {
      std::uniform_int_distribution<std::size_t> leaf(0, leaves.size() - 1);
      const int a = leaves[leaf(rng)];
      const int b = leaves[leaf(rng)];
      std::swap(cand.nodes[a].room, cand.nodes[b].room);
    } else {
      const int room = std::uniform_int_distribution<int>(0, n - 1)(rng);
      cand.types[room] = palette[std::uniform_int_distribution<std::size_t>(0, palette.size() - 1)(rng)];
    }
    const double e = layout_energy(cand.layout(bounds), params);
    if (e <= energy || u01(rng) < std::exp(-(e - energy) / std::max(temp, 1e-12))) {
      tree = std::move(cand);
      energy = e;
      if (energy < best_energy) {
        best = tree;
        best_energy = energy;
      }
    }
  }

  GeneratedFloorplan out;
  out.plan = to_floorplan(best.layout(bounds), plan_id.empty() ? "plan-" + std::to_string(seed) : plan_id);
  out.graph = room_graph(out.plan);
  out.energy = best_energy;
  return out;
}

}  // namespace scenegen
