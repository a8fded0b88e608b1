#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/postopt.hpp"
#include "scenegen/raster.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

// ===========================================================================
// Room-graph similarity

/// Type-valid node matching from generated to ground-truth indices.
struct NodeMatching {
  std::vector<std::pair<int, int>> pairs;  // (gen index, gt index)
  bool exhaustive = true;                  // false: greedy edge-aware heuristic
};

struct NodeScore {
  double score = 0.0;
  NodeMatching matching;
};

namespace detail {

using EdgeSet = std::set<std::pair<int, int>>;

inline EdgeSet edge_index_set(const RoomGraph& g) {
  EdgeSet s;
  for (const auto& [a, b] : g.edges) {
    const int i = g.index_of(a);
    const int j = g.index_of(b);
    if (i < 0 || j < 0) throw InvalidArgument("edge references unknown node");
    if (i != j) s.insert({std::min(i, j), std::max(i, j)});
  }
  return s;
}

inline int count_matched_edges(const EdgeSet& gen_edges, const EdgeSet& gt_edges, const std::vector<int>& map) {
  int n = 0;
  for (const auto& [u, v] : gen_edges) {
    const int a = map[u];
    const int b = map[v];
    if (a < 0 || b < 0) continue;
    if (gt_edges.count({std::min(a, b), std::max(a, b)})) ++n;
  }
  return n;
}

// Enumerates every injection of `small` into `large` (both index lists).
inline void for_each_injection(const std::vector<int>& small, const std::vector<int>& large,
                               const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> pick;
  std::vector<char> used(large.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == small.size()) {
      fn(pick);
      return;
    }
    for (std::size_t j = 0; j < large.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      pick.push_back(large[j]);
      rec(i + 1);
      pick.pop_back();
      used[j] = 0;
    }
  };
  rec(0);
}

}  // namespace detail

inline constexpr std::size_t kExhaustiveMatchingLimit = 8;

/// Maximum-cardinality type-constrained matching, choosing among maximum
/// matchings one that maximizes the number of matched edges.
///
/// The matching size is always sum over types of min(count_gen, count_gt).
/// Graphs with at most 8 nodes are searched exhaustively; larger graphs use
/// a greedy start refined by pairwise swaps (labelled non-exhaustive).
inline NodeMatching best_node_matching(const RoomGraph& gen, const RoomGraph& gt) {
  const auto gen_edges = detail::edge_index_set(gen);
  const auto gt_edges = detail::edge_index_set(gt);
  std::map<RoomType, std::pair<std::vector<int>, std::vector<int>>> by_type;
  for (int i = 0; i < static_cast<int>(gen.nodes.size()); ++i) by_type[gen.nodes[i].type].first.push_back(i);
  for (int i = 0; i < static_cast<int>(gt.nodes.size()); ++i) by_type[gt.nodes[i].type].second.push_back(i);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> groups;
  for (auto& [type, g] : by_type)
    if (!g.first.empty() && !g.second.empty()) groups.push_back(g);

  std::vector<int> map(gen.nodes.size(), -1);
  NodeMatching best;
  int best_edges = -1;
  auto record = [&]() {
    const int e = detail::count_matched_edges(gen_edges, gt_edges, map);
    if (e > best_edges) {
      best_edges = e;
      best.pairs.clear();
      for (int i = 0; i < static_cast<int>(map.size()); ++i)
        if (map[i] >= 0) best.pairs.emplace_back(i, map[i]);
    }
  };

  if (std::max(gen.nodes.size(), gt.nodes.size()) <= kExhaustiveMatchingLimit) {
    std::function<void(std::size_t)> rec = [&](std::size_t gi) {
      if (gi == groups.size()) {
        record();
        return;
      }
      const auto& [gs, ts] = groups[gi];
      if (gs.size() <= ts.size()) {
        detail::for_each_injection(gs, ts, [&](const std::vector<int>& img) {
          for (std::size_t k = 0; k < gs.size(); ++k) map[gs[k]] = img[k];
          rec(gi + 1);
          for (int g : gs) map[g] = -1;
        });
      } else {
        detail::for_each_injection(ts, gs, [&](const std::vector<int>& pre) {
          for (std::size_t k = 0; k < ts.size(); ++k) map[pre[k]] = ts[k];
          rec(gi + 1);
          for (int g : pre) map[g] = -1;
        });
      }
    };
    rec(0);
    best.exhaustive = true;
    return best;
  }

  // Greedy start: pair nodes of each type in index order.
  for (const auto& [gs, ts] : groups)
    for (std::size_t k = 0; k < std::min(gs.size(), ts.size()); ++k) map[gs[k]] = ts[k];
  int current = detail::count_matched_edges(gen_edges, gt_edges, map);
  bool improved = true;
  while (improved) {
    improved = false;
    for (const auto& [gs, ts] : groups) {
      // swap images of two gen nodes, or move a gen node onto a free gt node
      // (swapping with an unmatched gen node hands the gt node over)
      for (std::size_t a = 0; a < gs.size(); ++a) {
        for (std::size_t b = a + 1; b < gs.size(); ++b) {
          if (map[gs[a]] < 0 && map[gs[b]] < 0) continue;
          std::swap(map[gs[a]], map[gs[b]]);
          const int e = detail::count_matched_edges(gen_edges, gt_edges, map);
          if (e > current) {
            current = e;
            improved = true;
          } else {
            std::swap(map[gs[a]], map[gs[b]]);
          }
        }
        if (map[gs[a]] < 0) continue;
        for (int t : ts) {
          if (std::find(map.begin(), map.end(), t) != map.end()) continue;
          const int old = map[gs[a]];
          map[gs[a]] = t;
          const int e = detail::count_matched_edges(gen_edges, gt_edges, map);
          if (e > current) {
            current = e;
            improved = true;
          } else {
            map[gs[a]] = old;
          }
        }
      }
    }
  }
  for (int i = 0; i < static_cast<int>(map.size()); ++i)
    if (map[i] >= 0) best.pairs.emplace_back(i, map[i]);
  best.exhaustive = false;
  return best;
}

/// |M| / max(|V_gen|, |V_gt|); two empty graphs score 1.
inline NodeScore s_node(const RoomGraph& gen, const RoomGraph& gt) {
  NodeScore out;
  out.matching = best_node_matching(gen, gt);
  const std::size_t denom = std::max(gen.nodes.size(), gt.nodes.size());
  out.score = denom == 0 ? 1.0 : static_cast<double>(out.matching.pairs.size()) / static_cast<double>(denom);
  return out;
}

/// Area share of each room type.
inline std::map<RoomType, double> area_distribution(const RoomGraph& g) {
  double total = 0.0;
  for (const auto& n : g.nodes) total += n.area;
  if (!(total > 0.0)) throw InvalidArgument("graph has zero total area");
  std::map<RoomType, double> r;
  for (const auto& n : g.nodes) r[n.type] += n.area / total;
  return r;
}

/// 1 - D_L1 / 2 over the union of room types present in either graph.
inline double s_constraint(const RoomGraph& gen, const RoomGraph& gt) {
  const auto a = area_distribution(gen);
  const auto b = area_distribution(gt);
  std::set<RoomType> types;
  for (const auto& [t, v] : a) types.insert(t);
  for (const auto& [t, v] : b) types.insert(t);
  double d = 0.0;
  for (RoomType t : types) {
    const double ra = a.count(t) ? a.at(t) : 0.0;
    const double rb = b.count(t) ? b.at(t) : 0.0;
    d += std::abs(ra - rb);
  }
  return 1.0 - 0.5 * d;
}

/// |E_match| / max(|E_gen|, |E_gt|); two empty edge sets score 1.
inline double s_edge(const RoomGraph& gen, const RoomGraph& gt, const NodeMatching& m) {
  std::vector<int> map(gen.nodes.size(), -1);
  for (const auto& [g, t] : m.pairs) {
    if (g < 0 || g >= static_cast<int>(gen.nodes.size()) || t < 0 || t >= static_cast<int>(gt.nodes.size()))
      throw InvalidArgument("matching references unknown node");
    map[g] = t;
  }
  const auto ge = detail::edge_index_set(gen);
  const auto te = detail::edge_index_set(gt);
  const std::size_t denom = std::max(ge.size(), te.size());
  if (denom == 0) return 1.0;
  return static_cast<double>(detail::count_matched_edges(ge, te, map)) / static_cast<double>(denom);
}

// ===========================================================================
// Scene metrics

/// Fraction of scenes whose occupied-slot count equals n_target.
inline double sr_quantity(std::span<const SceneLayout> scenes, int n_target) {
  if (scenes.empty()) throw InvalidArgument("no scenes");
  std::size_t hits = 0;
  for (const auto& s : scenes) hits += static_cast<int>(s.occupied_count()) == n_target;
  return static_cast<double>(hits) / static_cast<double>(scenes.size());
}

// Intersection volume above this counts as a collision.
inline constexpr double kCollisionVolume = 1e-9;

/// Share of articulated objects whose functional box overlaps another
/// object's functional box. Articulation comes from the record each slot's
/// latent retrieves. No articulated objects gives 0.
inline double r_acoll(const SceneLayout& scene, const AssetCatalog& catalog) {
  std::vector<Aabb3> boxes;
  std::vector<char> articulated;
  for (const auto& slot : scene.slots) {
    if (!slot.occupied()) continue;
    const auto art = retrieved_articulation(slot, catalog);
    boxes.push_back(functional_extension(slot, art));
    articulated.push_back(art.has_value());
  }
  int n_art = 0, flagged = 0;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (!articulated[j]) continue;
    ++n_art;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (i != j && intersection_volume(boxes[i], boxes[j]) > kCollisionVolume) {
        ++flagged;
        break;
      }
    }
  }
  return n_art == 0 ? 0.0 : static_cast<double>(flagged) / n_art;
}

inline double sr_walkable(std::span<const SceneLayout> scenes, std::span<const FloorPlan* const> plans, double tau) {
  if (scenes.empty()) throw InvalidArgument("no scenes");
  if (plans.size() != scenes.size()) throw DimensionMismatch("one floor plan per scene required");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) hits += walkable_ratio_naive(scenes[i], *plans[i]) >= tau;
  return static_cast<double>(hits) / static_cast<double>(scenes.size());
}

/// Fraction of occupied slots whose static AABB overlaps another's.
inline double col_obj(const SceneLayout& scene) {
  std::vector<Aabb3> boxes;
  for (const auto& slot : scene.slots)
    if (slot.occupied()) boxes.push_back(static_box(slot));
  if (boxes.empty()) return 0.0;
  int flagged = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (i != j && intersection_volume(boxes[i], boxes[j]) > kCollisionVolume) {
        ++flagged;
        break;
      }
    }
  }
  return static_cast<double>(flagged) / static_cast<double>(boxes.size());
}

inline double point_rect_distance(const Vec2& p, const Rect2& r) {
  const double dx = std::max({r.lo.x() - p.x(), 0.0, p.x() - r.hi.x()});
  const double dy = std::max({r.lo.y() - p.y(), 0.0, p.y() - r.hi.y()});
  return std::hypot(dx, dy);
}

/// Grid reachability: free floor is eroded by the agent radius, the largest
/// 4-connected component is kept, and an object counts as reachable when a
/// component cell center lies within agent_radius + cell of its footprint.
/// A scene without objects scores 1.
inline double r_reach(const SceneLayout& scene, const FloorPlan& plan, double agent_radius = 0.3,
                      double cell = 0.05) {
  if (!(plan.total_area() > 0.0)) throw InvalidArgument("floor area is zero");
  FloorGrid g = rasterize_floor(plan, cell);
  mark_footprints(g, scene);
  const int nx = g.nx, ny = g.ny;
  auto free_at = [&](int ix, int iy) { return g.valid(ix, iy) && g.in_room[g.index(ix, iy)] && !g.blocked[g.index(ix, iy)]; };

  const int rc = static_cast<int>(std::ceil(agent_radius / cell));
  std::vector<std::pair<int, int>> disk;
  for (int dy = -rc; dy <= rc; ++dy)
    for (int dx = -rc; dx <= rc; ++dx)
      if (std::hypot(dx, dy) * cell <= agent_radius + 1e-12) disk.emplace_back(dx, dy);

  std::vector<unsigned char> eroded(static_cast<std::size_t>(nx) * ny, 0);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (!free_at(ix, iy)) continue;
      bool ok = true;
      for (const auto& [dx, dy] : disk)
        if (!free_at(ix + dx, iy + dy)) {
          ok = false;
          break;
        }
      eroded[g.index(ix, iy)] = ok;
    }
  }

  std::vector<int> label(eroded.size(), -1);
  int best_label = -1;
  std::size_t best_size = 0;
  int next = 0;
  for (int start = 0; start < static_cast<int>(eroded.size()); ++start) {
    if (!eroded[start] || label[start] >= 0) continue;
    std::size_t size = 0;
    std::deque<int> q{start};
    label[start] = next;
    while (!q.empty()) {
      const int c = q.front();
      q.pop_front();
      ++size;
      const int cx = c % nx, cy = c / nx;
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : nb) {
        const int x = cx + d[0], y = cy + d[1];
        if (!g.valid(x, y)) continue;
        const int k = g.index(x, y);
        if (eroded[k] && label[k] < 0) {
          label[k] = next;
          q.push_back(k);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = next;
    }
    ++next;
  }

  int n = 0, reachable = 0;
  for (const auto& slot : scene.slots) {
    if (!slot.occupied()) continue;
    ++n;
    if (best_label < 0) continue;
    const Rect2 r = footprint(slot).rect;
    const double reach = agent_radius + cell;
    const int x0 = std::max(0, static_cast<int>(std::floor((r.lo.x() - reach - g.origin.x()) / cell)));
    const int x1 = std::min(nx - 1, static_cast<int>(std::ceil((r.hi.x() + reach - g.origin.x()) / cell)));
    const int y0 = std::max(0, static_cast<int>(std::floor((r.lo.y() - reach - g.origin.y()) / cell)));
    const int y1 = std::min(ny - 1, static_cast<int>(std::ceil((r.hi.y() + reach - g.origin.y()) / cell)));
    bool hit = false;
    for (int iy = y0; iy <= y1 && !hit; ++iy)
      for (int ix = x0; ix <= x1 && !hit; ++ix)
        hit = label[g.index(ix, iy)] == best_label && point_rect_distance(g.center(ix, iy), r) <= reach + 1e-12;
    reachable += hit;
  }
  return n == 0 ? 1.0 : static_cast<double>(reachable) / n;
}

inline constexpr double kCklSmoothing = 1e-6;

/// Smoothed distribution of occupied-slot classes over a corpus.
inline std::vector<double> category_distribution(std::span<const SceneLayout> scenes, int num_classes,
                                                 double smoothing = kCklSmoothing) {
  std::vector<double> p(num_classes, 0.0);
  double total = 0.0;
  for (const auto& s : scenes)
    for (const auto& slot : s.slots) {
      const int c = slot.class_id();
      if (c >= 0 && c < num_classes) {
        p[c] += 1.0;
        total += 1.0;
      }
    }
  for (double& v : p) v = ((total > 0.0 ? v / total : 0.0) + smoothing) / (1.0 + num_classes * smoothing);
  return p;
}

/// KL(P_gen || P_ref) between smoothed object-category distributions.
inline double ckl(std::span<const SceneLayout> gen, std::span<const SceneLayout> ref, int num_classes) {
  if (gen.empty() || ref.empty()) throw InvalidArgument("CKL needs non-empty corpora");
  const auto p = category_distribution(gen, num_classes);
  const auto q = category_distribution(ref, num_classes);
  double kl = 0.0;
  for (int i = 0; i < num_classes; ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(kl, 0.0);
}

}  // namespace scenegen
