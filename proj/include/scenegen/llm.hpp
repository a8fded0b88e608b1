#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/floorplan_gen.hpp"

namespace scenegen {

/// Text-in, text-out model endpoint. `schema` describes the JSON the reply
/// must follow and is forwarded to the model as part of the request.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string send(const std::string& prompt, const nlohmann::json& schema) = 0;
};

/// JSON-schema descriptor of the reply expected by params_from_prompt.
inline nlohmann::json floorplan_params_schema() {
  using nlohmann::json;
  json room_types = json::array();
  for (int i = 0; i < kNumRoomTypes; ++i) room_types.push_back(std::string(to_string(static_cast<RoomType>(i))));
  const json number = {{"type", "number"}};
  return {
      {"type", "object"},
      {"additionalProperties", false},
      {"required", {"total_area", "rooms", "adjacencies", "squareness_weight", "adjacency_weight", "area_weight",
                    "count_weight", "anneal"}},
      {"properties",
       {{"total_area", number},
        {"rooms",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"additionalProperties", false},
            {"required", {"type", "area_ratio"}},
            {"properties", {{"type", {{"enum", room_types}}}, {"area_ratio", number}}}}}}},
        {"adjacencies",
         {{"type", "array"},
          {"items", {{"type", "array"}, {"minItems", 2}, {"maxItems", 2}, {"items", {{"enum", room_types}}}}}}},
        {"squareness_weight", number},
        {"adjacency_weight", number},
        {"area_weight", number},
        {"count_weight", number},
        {"anneal",
         {{"type", "object"},
          {"additionalProperties", false},
          {"required", {"initial_temp", "cooling_rate", "steps"}},
          {"properties", {{"initial_temp", number}, {"cooling_rate", number}, {"steps", {{"type", "integer"}}}}}}}}}};
}

inline constexpr double kSquarenessDefault = 1.0;
inline constexpr double kSquarenessHigh = 10.0;

/// Deterministic rule table standing in for a model.
///
///   - "<n> bedroom(s)" / "<n> bathroom(s)", n a digit or a number word up to
///     six; a bare mention counts as one
///   - kitchen, dining, office: one room each when mentioned
///   - a living room is always present
///   - "square" selects the high squareness preset
///   - base areas (m^2): living 25, bedroom 14, kitchen 10, bathroom 6,
///     dining 12, office 10; ratios are area shares, total is their sum
///   - bedrooms and the kitchen are required to touch the living room
class MockLlmClient : public LlmClient {
 public:
  std::string send(const std::string& prompt, const nlohmann::json& /*schema*/) override {
    std::string text;
    for (char c : prompt) text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    std::vector<std::string> words;
    {
      std::string cur;
      for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
          cur.push_back(c);
        } else if (!cur.empty()) {
          words.push_back(cur);
          cur.clear();
        }
      }
      if (!cur.empty()) words.push_back(cur);
    }
    auto count_of = [&](const std::string& stem) {
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (words[i].rfind(stem, 0) != 0) continue;
        if (i > 0) {
          if (auto n = number_word(words[i - 1])) return *n;
        }
        return 1;
      }
      return 0;
    };
    auto mentions = [&](const std::string& stem) {
      return std::any_of(words.begin(), words.end(), [&](const std::string& w) { return w.rfind(stem, 0) == 0; });
    };

    std::vector<std::pair<RoomType, double>> rooms{{RoomType::kLiving, 25.0}};
    for (int i = 0; i < count_of("bedroom"); ++i) rooms.emplace_back(RoomType::kBedroom, 14.0);
    if (mentions("kitchen")) rooms.emplace_back(RoomType::kKitchen, 10.0);
    for (int i = 0; i < count_of("bathroom"); ++i) rooms.emplace_back(RoomType::kBathroom, 6.0);
    if (mentions("dining")) rooms.emplace_back(RoomType::kDining, 12.0);
    if (mentions("office")) rooms.emplace_back(RoomType::kOffice, 10.0);

    double total = 0.0;
    for (const auto& r : rooms) total += r.second;
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& [type, area] : rooms) jr.push_back({{"type", std::string(to_string(type))}, {"area_ratio", area / total}});
    nlohmann::json adj = nlohmann::json::array();
    if (count_of("bedroom") > 0) adj.push_back({"bedroom", "living"});
    if (mentions("kitchen")) adj.push_back({"kitchen", "living"});

    const nlohmann::json reply = {{"total_area", total},
                                  {"rooms", jr},
                                  {"adjacencies", adj},
                                  {"squareness_weight", mentions("square") ? kSquarenessHigh : kSquarenessDefault},
                                  {"adjacency_weight", 5.0},
                                  {"area_weight", 10.0},
                                  {"count_weight", 5.0},
                                  {"anneal", {{"initial_temp", 1.0}, {"cooling_rate", 0.998}, {"steps", 3000}}}};
    return reply.dump();
  }

 private:
  static std::optional<int> number_word(const std::string& w) {
    static const std::map<std::string, int> table{{"one", 1},  {"two", 2},  {"three", 3}, {"four", 4},
                                                  {"five", 5}, {"six", 6}, {"single", 1}, {"a", 1}};
    if (auto it = table.find(w); it != table.end()) return it->second;
    if (w.size() == 1 && w[0] >= '1' && w[0] <= '6') return w[0] - '0';
    return std::nullopt;
  }
};

namespace detail {

inline double schema_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw SchemaViolation(std::string("'") + key + "' must be a number", "");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaViolation(std::string("'") + key + "' must be finite", "");
  return d;
}

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& keys, const char* what) {
  if (!j.is_object()) throw SchemaViolation(std::string(what) + " must be an object", "");
  for (const auto& k : keys)
    if (!j.contains(k)) throw SchemaViolation(std::string(what) + " lacks '" + k + "'", "");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw SchemaViolation(std::string(what) + " has unknown key '" + k + "'", "");
}

inline RoomType schema_room_type(const nlohmann::json& v) {
  if (!v.is_string()) throw SchemaViolation("room type must be a string", "");
  try {
    return room_type_from_string(v.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw SchemaViolation(e.what(), "");
  }
}

template <typename T>
T clamp_warn(T v, T lo, T hi, const std::string& key, std::vector<std::string>& warnings) {
  const T c = std::clamp(v, lo, hi);
  if (c != v) {
    std::ostringstream os;
    os << key << " clamped from " << v << " to " << c;
    warnings.push_back(os.str());
  }
  return c;
}

}  // namespace detail

/// Strict parse of one reply. Structural problems throw SchemaViolation;
/// well-typed but out-of-range values are clamped and reported in `warnings`.
inline FloorplanParams parse_floorplan_params(const std::string& raw, std::vector<std::string>& warnings) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("reply is not JSON: ") + e.what(), raw);
  }
  try {
    detail::require_keys(j,
                         {"total_area", "rooms", "adjacencies", "squareness_weight", "adjacency_weight",
                          "area_weight", "count_weight", "anneal"},
                         "reply");
    FloorplanParams p;
    p.total_area = detail::clamp_warn(detail::schema_number(j, "total_area"), 10.0, 2000.0, "total_area", warnings);
    const json& rooms = j.at("rooms");
    if (!rooms.is_array() || rooms.empty()) throw SchemaViolation("'rooms' must be a non-empty array", raw);
    for (const auto& r : rooms) {
      detail::require_keys(r, {"type", "area_ratio"}, "room");
      p.room_specs.push_back({detail::schema_room_type(r.at("type")),
                              detail::clamp_warn(detail::schema_number(r, "area_ratio"), 0.0, 1.0, "area_ratio", warnings)});
    }
    double sum = 0.0;
    for (const auto& r : p.room_specs) sum += r.target_ratio;
    if (sum > 1.05) {
      for (auto& r : p.room_specs) r.target_ratio /= sum;
      warnings.push_back("area ratios summed to " + std::to_string(sum) + "; rescaled to 1");
    }
    const json& adj = j.at("adjacencies");
    if (!adj.is_array()) throw SchemaViolation("'adjacencies' must be an array", raw);
    for (const auto& a : adj) {
      if (!a.is_array() || a.size() != 2) throw SchemaViolation("adjacency must be a pair", raw);
      p.required_adjacencies.emplace_back(detail::schema_room_type(a[0]), detail::schema_room_type(a[1]));
    }
    p.squareness_weight = detail::clamp_warn(detail::schema_number(j, "squareness_weight"), 0.0, 100.0, "squareness_weight", warnings);
    p.adjacency_weight = detail::clamp_warn(detail::schema_number(j, "adjacency_weight"), 0.0, 100.0, "adjacency_weight", warnings);
    p.area_weight = detail::clamp_warn(detail::schema_number(j, "area_weight"), 0.0, 100.0, "area_weight", warnings);
    p.count_weight = detail::clamp_warn(detail::schema_number(j, "count_weight"), 0.0, 100.0, "count_weight", warnings);
    const json& an = j.at("anneal");
    detail::require_keys(an, {"initial_temp", "cooling_rate", "steps"}, "anneal");
    p.anneal.initial_temp = detail::clamp_warn(detail::schema_number(an, "initial_temp"), 1e-3, 1e3, "initial_temp", warnings);
    p.anneal.cooling_rate = detail::clamp_warn(detail::schema_number(an, "cooling_rate"), 0.5, 0.99999, "cooling_rate", warnings);
    if (!an.at("steps").is_number_integer()) throw SchemaViolation("'steps' must be an integer", raw);
    p.anneal.steps = static_cast<int>(
        detail::clamp_warn<std::int64_t>(an.at("steps").get<std::int64_t>(), 0, 200000, "steps", warnings));
    return p;
  } catch (const SchemaViolation& e) {
    throw SchemaViolation(e.what(), raw);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("reply does not match schema: ") + e.what(), raw);
  }
}

inline constexpr int kPromptRetries = 2;

/// Sends the prompt, re-asking up to `retries` more times on a schema
/// violation. Transport errors propagate immediately. The last violation is
/// rethrown with its raw reply attached.
inline FloorplanParams params_from_prompt(const std::string& prompt, LlmClient& client,
                                          std::vector<std::string>* warnings = nullptr, int retries = kPromptRetries) {
  const nlohmann::json schema = floorplan_params_schema();
  for (int attempt = 0;; ++attempt) {
    const std::string raw = client.send(prompt, schema);
    std::vector<std::string> w;
    try {
      FloorplanParams p = parse_floorplan_params(raw, w);
      if (warnings) *warnings = std::move(w);
      return p;
    } catch (const SchemaViolation&) {
      if (attempt >= retries) throw;
    }
  }
}

}  // namespace scenegen
