#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/geometry.hpp"

namespace scenegen {

enum class RoomType { kLiving, kBedroom, kKitchen, kBathroom, kDining, kOffice, kHallway, kStorage };

inline constexpr int kNumRoomTypes = 8;

inline constexpr std::array<std::string_view, kNumRoomTypes> kRoomTypeNames = {
    "living", "bedroom", "kitchen", "bathroom", "dining", "office", "hallway", "storage"};

inline std::string_view to_string(RoomType t) { return kRoomTypeNames[static_cast<int>(t)]; }

inline RoomType room_type_from_string(std::string_view s) {
  for (int i = 0; i < kNumRoomTypes; ++i)
    if (kRoomTypeNames[i] == s) return static_cast<RoomType>(i);
  throw InvalidArgument("unknown room type '" + std::string(s) + "'");
}

struct Room {
  std::string id;
  RoomType type = RoomType::kLiving;
  std::vector<Vec2> polygon;

  double area() const { return polygon_area(polygon); }
};

/// Room polygons plus door adjacencies. Also the conditioning input of the
/// denoiser and the ground truth for the graph metrics.
struct FloorPlan {
  std::string id;
  std::vector<Room> rooms;
  std::vector<std::pair<std::string, std::string>> doors;

  Rect2 bbox() const {
    Rect2 r{Vec2::Constant(1e300), Vec2::Constant(-1e300)};
    for (const auto& room : rooms) {
      const Rect2 b = polygon_bounds(room.polygon);
      r.lo = r.lo.cwiseMin(b.lo);
      r.hi = r.hi.cwiseMax(b.hi);
    }
    return r;
  }

  double total_area() const {
    double a = 0.0;
    for (const auto& room : rooms) a += room.area();
    return a;
  }

  const Room* find_room(const std::string& room_id) const {
    for (const auto& r : rooms)
      if (r.id == room_id) return &r;
    return nullptr;
  }

  bool contains(const Vec2& p) const {
    return std::any_of(rooms.begin(), rooms.end(), [&](const Room& r) { return point_in_polygon(r.polygon, p); });
  }

  void validate() const {
    if (rooms.empty()) throw InvalidArgument("floor plan has no rooms");
    std::set<std::string> ids;
    for (const auto& r : rooms) {
      if (!ids.insert(r.id).second) throw InvalidArgument("duplicate room id '" + r.id + "'");
      if (!polygon_is_simple(r.polygon)) throw InvalidArgument("room '" + r.id + "' polygon is not simple");
      if (r.area() <= 0.0) throw InvalidArgument("room '" + r.id + "' has zero area");
    }
    for (const auto& [a, b] : doors) {
      if (!ids.count(a) || !ids.count(b)) throw InvalidArgument("door references unknown room");
      if (a == b) throw InvalidArgument("door connects a room to itself");
    }
  }
};

inline FloorPlan make_rect_plan(std::string id, double width, double depth, RoomType type = RoomType::kLiving) {
  FloorPlan plan;
  plan.id = std::move(id);
  plan.rooms.push_back({"0", type, {Vec2(0, 0), Vec2(width, 0), Vec2(width, depth), Vec2(0, depth)}});
  return plan;
}

struct RoomNode {
  std::string id;
  RoomType type = RoomType::kLiving;
  double area = 0.0;
};

/// G = (V, E): typed rooms and undirected door edges.
struct RoomGraph {
  std::vector<RoomNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;

  int index_of(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    std::set<std::string> ids;
    for (const auto& n : nodes) {
      if (!ids.insert(n.id).second) throw InvalidArgument("duplicate node id '" + n.id + "'");
      if (n.area < 0.0) throw InvalidArgument("negative room area");
    }
    for (const auto& [a, b] : edges)
      if (!ids.count(a) || !ids.count(b)) throw InvalidArgument("edge references unknown node");
  }
};

inline RoomGraph room_graph(const FloorPlan& plan) {
  RoomGraph g;
  for (const auto& r : plan.rooms) g.nodes.push_back({r.id, r.type, r.area()});
  g.edges = plan.doors;
  return g;
}

}  // namespace scenegen
