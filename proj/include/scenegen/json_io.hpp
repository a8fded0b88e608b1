#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

using nlohmann::json;

namespace detail {

inline json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline Vec3 vec3_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3) throw InvalidArgument("expected a 3-vector");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline std::string id_string(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

}  // namespace detail

inline json to_json(const SceneLayout& scene) {
  json slots = json::array();
  for (const auto& s : scene.slots) {
    slots.push_back({{"location", {s.location.x(), s.location.y(), s.location.z()}},
                     {"size", {s.size.x(), s.size.y(), s.size.z()}},
                     {"yaw", s.yaw},
                     {"class_logits", detail::vec_to_json(s.class_logits)},
                     {"latent", detail::vec_to_json(s.latent)}});
  }
  return {{"floorplan_id", scene.floorplan_id}, {"seed", scene.seed}, {"slots", slots}};
}

inline SceneLayout scene_from_json(const json& j) {
  try {
    SceneLayout scene;
    scene.floorplan_id = detail::id_string(j.at("floorplan_id"));
    scene.seed = j.value("seed", std::uint64_t{0});
    for (const auto& js : j.at("slots")) {
      ObjectSlot s;
      s.location = detail::vec3_from_json(js.at("location"));
      s.size = detail::vec3_from_json(js.at("size"));
      s.yaw = js.at("yaw").get<double>();
      s.class_logits = detail::vec_from_json(js.at("class_logits"));
      s.latent = detail::vec_from_json(js.at("latent"));
      if (!s.class_logits.allFinite()) throw InvalidArgument("class logits must be finite");
      scene.slots.push_back(std::move(s));
    }
    return scene;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed scene JSON: ") + e.what());
  }
}

inline json to_json(const AssetCatalog& cat) {
  json assets = json::array();
  for (const auto& a : cat.assets()) {
    json art = nullptr;
    if (a.articulation)
      art = {{"axis", {a.articulation->axis.x(), a.articulation->axis.y(), a.articulation->axis.z()}},
             {"extension_depth", a.articulation->extension_depth}};
    assets.push_back({{"asset_id", a.asset_id},
                      {"class_id", a.class_id},
                      {"half_extents", {a.half_extents.x(), a.half_extents.y(), a.half_extents.z()}},
                      {"latent", detail::vec_to_json(a.latent)},
                      {"articulation", art}});
  }
  return {{"classes", cat.classes()}, {"assets", assets}};
}

/// Records without a "latent" get the seeded default of dimension `latent_dim`.
inline AssetCatalog catalog_from_json(const json& j, int latent_dim = 8) {
  try {
    std::vector<std::string> classes = j.at("classes").get<std::vector<std::string>>();
    std::vector<AssetRecord> assets;
    for (const auto& ja : j.at("assets")) {
      AssetRecord a;
      a.asset_id = ja.at("asset_id").get<std::int64_t>();
      const json& cls = ja.at("class_id");
      if (cls.is_string()) {
        auto it = std::find(classes.begin(), classes.end(), cls.get<std::string>());
        if (it == classes.end()) throw InvalidArgument("unknown class name " + cls.get<std::string>());
        a.class_id = static_cast<int>(it - classes.begin());
      } else {
        a.class_id = cls.get<int>();
      }
      a.half_extents = detail::vec3_from_json(ja.at("half_extents"));
      a.latent = ja.contains("latent") ? detail::vec_from_json(ja.at("latent")) : default_latent(a.asset_id, latent_dim);
      if (ja.contains("articulation") && !ja.at("articulation").is_null()) {
        const json& art = ja.at("articulation");
        a.articulation = ArticulationSpec{detail::vec3_from_json(art.at("axis")), art.at("extension_depth").get<double>()};
      }
      assets.push_back(std::move(a));
    }
    return AssetCatalog(std::move(classes), std::move(assets));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed catalog JSON: ") + e.what());
  }
}

inline json to_json(const FloorPlan& plan) {
  json rooms = json::array();
  for (const auto& r : plan.rooms) {
    json poly = json::array();
    for (const auto& p : r.polygon) poly.push_back({p.x(), p.y()});
    rooms.push_back({{"id", r.id}, {"type", std::string(to_string(r.type))}, {"polygon", poly}});
  }
  json doors = json::array();
  for (const auto& [a, b] : plan.doors) doors.push_back({a, b});
  return {{"id", plan.id}, {"rooms", rooms}, {"doors", doors}};
}

inline FloorPlan floorplan_from_json(const json& j, const std::string& fallback_id = "") {
  try {
    FloorPlan plan;
    plan.id = j.contains("id") ? detail::id_string(j.at("id")) : fallback_id;
    for (const auto& jr : j.at("rooms")) {
      Room r;
      r.id = detail::id_string(jr.at("id"));
      r.type = room_type_from_string(jr.at("type").get<std::string>());
      for (const auto& p : jr.at("polygon")) r.polygon.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      plan.rooms.push_back(std::move(r));
    }
    if (j.contains("doors"))
      for (const auto& d : j.at("doors")) plan.doors.emplace_back(detail::id_string(d.at(0)), detail::id_string(d.at(1)));
    plan.validate();
    return plan;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed floor plan JSON: ") + e.what());
  }
}

inline json to_json(const RoomGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"type", std::string(to_string(n.type))}, {"area", n.area}});
  json edges = json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  return {{"nodes", nodes}, {"edges", edges}};
}

inline RoomGraph room_graph_from_json(const json& j) {
  try {
    RoomGraph g;
    for (const auto& jn : j.at("nodes"))
      g.nodes.push_back({detail::id_string(jn.at("id")), room_type_from_string(jn.at("type").get<std::string>()),
                         jn.at("area").get<double>()});
    for (const auto& e : j.at("edges")) g.edges.emplace_back(detail::id_string(e.at(0)), detail::id_string(e.at(1)));
    g.validate();
    return g;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed room graph JSON: ") + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw InvalidArgument("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidArgument("cannot write '" + path.string() + "'");
  f << text;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace scenegen
