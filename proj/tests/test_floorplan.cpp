#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "scenegen/floorplan_gen.hpp"
#include "scenegen/json_io.hpp"
#include "scenegen/llm.hpp"
#include "scenegen/llm_http.hpp"
#include "scenegen/metrics.hpp"

using namespace scenegen;

namespace {

FloorplanParams three_room_params() {
  FloorplanParams p;
  p.total_area = 60.0;
  p.room_specs = {{RoomType::kLiving, 0.45}, {RoomType::kBedroom, 0.35}, {RoomType::kBathroom, 0.2}};
  p.required_adjacencies = {{RoomType::kBedroom, RoomType::kLiving}};
  p.anneal.steps = 2000;
  return p;
}

RectLayout random_layout(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ty(0, 3);
  SlicingTree tree;
  std::vector<int> rooms(n);
  std::iota(rooms.begin(), rooms.end(), 0);
  detail::build_slicing(tree, rooms, std::vector<double>(n, 1.0));
  for (auto& node : tree.nodes) node.ratio = 0.2 + 0.6 * u(rng);
  for (int i = 0; i < n; ++i) tree.types.push_back(static_cast<RoomType>(ty(rng)));
  return tree.layout({Vec2::Zero(), Vec2(8.0, 6.0)});
}

// Recomputes each energy term from scratch with plain loops.
EnergyTerms reference_terms(const RectLayout& L, const FloorplanParams& p) {
  EnergyTerms e;
  double total = 0.0;
  for (const auto& r : L.rects) total += (r.hi.x() - r.lo.x()) * (r.hi.y() - r.lo.y());
  for (int t = 0; t < kNumRoomTypes; ++t) {
    const auto type = static_cast<RoomType>(t);
    double share = 0.0, target = 0.0;
    int have = 0, want = 0;
    for (std::size_t i = 0; i < L.rects.size(); ++i)
      if (L.types[i] == type) {
        share += (L.rects[i].hi.x() - L.rects[i].lo.x()) * (L.rects[i].hi.y() - L.rects[i].lo.y()) / total;
        ++have;
      }
    for (const auto& s : p.room_specs)
      if (s.type == type) {
        target += s.target_ratio;
        ++want;
      }
    e.area += std::abs(share - target);
    e.count += std::abs(have - want);
  }
  auto touching = [](const Rect2& a, const Rect2& b) {
    const double ox = std::min(a.hi.x(), b.hi.x()) - std::max(a.lo.x(), b.lo.x());
    const double oy = std::min(a.hi.y(), b.hi.y()) - std::max(a.lo.y(), b.lo.y());
    if (std::abs(ox) < 1e-9) return oy;  // vertical contact
    if (std::abs(oy) < 1e-9) return ox;  // horizontal contact
    return 0.0;
  };
  for (const auto& [a, b] : p.required_adjacencies) {
    bool ok = false;
    for (std::size_t i = 0; i < L.rects.size(); ++i)
      for (std::size_t j = 0; j < L.rects.size(); ++j)
        if (i != j && L.types[i] == a && L.types[j] == b && touching(L.rects[i], L.rects[j]) >= 0.8 - 1e-9) ok = true;
    e.adjacency += !ok;
  }
  for (const auto& r : L.rects) {
    const double w = r.hi.x() - r.lo.x(), d = r.hi.y() - r.lo.y();
    const double asp = std::max(w, d) / std::min(w, d);
    e.squareness += (asp - 1) * (asp - 1);
  }
  e.area *= p.area_weight;
  e.count *= p.count_weight;
  e.adjacency *= p.adjacency_weight;
  e.squareness *= p.squareness_weight;
  return e;
}

RectLayout layout_of(const FloorPlan& plan) {
  RectLayout L;
  for (const auto& r : plan.rooms) {
    L.types.push_back(r.type);
    L.rects.push_back(polygon_bounds(r.polygon));
  }
  return L;
}

double mean_aspect_deviation(const FloorPlan& plan) {
  double s = 0.0;
  for (const auto& r : plan.rooms) {
    const Rect2 b = polygon_bounds(r.polygon);
    s += std::max(b.width(), b.depth()) / std::min(b.width(), b.depth()) - 1.0;
  }
  return s / plan.rooms.size();
}

bool has_edge(const FloorPlan& plan, RoomType a, RoomType b) {
  for (const auto& [x, y] : plan.doors) {
    const RoomType tx = plan.find_room(x)->type, ty = plan.find_room(y)->type;
    if ((tx == a && ty == b) || (tx == b && ty == a)) return true;
  }
  return false;
}

struct ScriptedClient : LlmClient {
  std::vector<std::string> replies;
  int calls = 0;
  std::string send(const std::string&, const nlohmann::json&) override {
    return replies[std::min<std::size_t>(calls++, replies.size() - 1)];
  }
};

struct FailingClient : LlmClient {
  int calls = 0;
  std::string send(const std::string&, const nlohmann::json&) override {
    ++calls;
    throw TransportError("connection refused");
  }
};

int count_type(const FloorplanParams& p, RoomType t) {
  return static_cast<int>(std::count_if(p.room_specs.begin(), p.room_specs.end(), [&](const RoomSpec& s) { return s.type == t; }));
}

}  // namespace

// ---------------------------------------------------------------------------
// Energy

TEST(LayoutEnergy, ExactSpecWithSquareRoomsIsZero) {
  FloorplanParams p;
  p.room_specs = {{RoomType::kLiving, 0.5}, {RoomType::kBedroom, 0.5}};
  p.required_adjacencies = {{RoomType::kLiving, RoomType::kBedroom}};
  const RectLayout L{{RoomType::kLiving, RoomType::kBedroom},
                     {{Vec2(0, 0), Vec2(4, 4)}, {Vec2(4, 0), Vec2(8, 4)}}};
  EXPECT_DOUBLE_EQ(layout_energy(L, p), 0.0);
}

TEST(LayoutEnergy, MissingAdjacencyAddsExactlyItsWeight) {
  FloorplanParams p;
  p.room_specs = {{RoomType::kLiving, 1.0 / 3}, {RoomType::kBedroom, 1.0 / 3}, {RoomType::kKitchen, 1.0 / 3}};
  p.adjacency_weight = 7.5;
  const RectLayout L{{RoomType::kLiving, RoomType::kKitchen, RoomType::kBedroom},
                     {{Vec2(0, 0), Vec2(3, 3)}, {Vec2(3, 0), Vec2(6, 3)}, {Vec2(6, 0), Vec2(9, 3)}}};
  const double base = layout_energy(L, p);
  p.required_adjacencies = {{RoomType::kLiving, RoomType::kKitchen}};
  EXPECT_DOUBLE_EQ(layout_energy(L, p), base);
  p.required_adjacencies.push_back({RoomType::kLiving, RoomType::kBedroom});
  EXPECT_DOUBLE_EQ(layout_energy(L, p), base + 7.5);
}

TEST(LayoutEnergy, MatchesTermByTermOracleOnRandomLayouts) {
  std::mt19937_64 rng(1);
  FloorplanParams p;
  p.room_specs = {{RoomType::kLiving, 0.4}, {RoomType::kBedroom, 0.3}, {RoomType::kBathroom, 0.1}, {RoomType::kKitchen, 0.2}};
  p.required_adjacencies = {{RoomType::kBedroom, RoomType::kLiving}, {RoomType::kKitchen, RoomType::kLiving}};
  p.squareness_weight = 2.0;
  for (int rep = 0; rep < 200; ++rep) {
    const RectLayout L = random_layout(rng, 2 + rep % 5);
    const EnergyTerms got = layout_energy_terms(L, p), ref = reference_terms(L, p);
    EXPECT_NEAR(got.area, ref.area, 1e-12);
    EXPECT_NEAR(got.count, ref.count, 1e-12);
    EXPECT_NEAR(got.adjacency, ref.adjacency, 1e-12);
    EXPECT_NEAR(got.squareness, ref.squareness, 1e-9);
    EXPECT_GE(got.total(), 0.0);
  }
}

TEST(LayoutEnergy, MonotoneInViolationCounts) {
  FloorplanParams p;
  p.room_specs = {{RoomType::kLiving, 0.5}, {RoomType::kBedroom, 0.5}};
  const RectLayout two{{RoomType::kLiving, RoomType::kBedroom}, {{Vec2(0, 0), Vec2(4, 4)}, {Vec2(4, 0), Vec2(8, 4)}}};
  const RectLayout wrong{{RoomType::kLiving, RoomType::kKitchen}, two.rects};
  EXPECT_GT(layout_energy_terms(wrong, p).count, layout_energy_terms(two, p).count);
  EXPECT_GT(layout_energy(wrong, p), layout_energy(two, p));
}

TEST(SharedWalls, RequiresMinimumDoorWidth) {
  const std::vector<Rect2> r{{Vec2(0, 0), Vec2(2, 2)}, {Vec2(2, 1.5), Vec2(4, 4)}, {Vec2(2, 0), Vec2(4, 1.5)}};
  const auto w = shared_walls(r);
  EXPECT_EQ(w, (std::vector<std::pair<int, int>>{{0, 2}, {1, 2}}));  // 0-1 share only 0.5 m
}

// ---------------------------------------------------------------------------
// Generator

TEST(GenerateFloorplan, TilesTheBoundingRectangle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    FloorplanParams p = three_room_params();
    p.room_specs.push_back({RoomType::kKitchen, 0.0});
    const GeneratedFloorplan g = generate_floorplan(p, seed);
    double area = 0.0;
    for (std::size_t i = 0; i < g.plan.rooms.size(); ++i) {
      const Rect2 a = polygon_bounds(g.plan.rooms[i].polygon);
      area += a.area();
      EXPECT_NEAR(g.plan.rooms[i].area(), a.area(), 1e-9);
      for (std::size_t j = i + 1; j < g.plan.rooms.size(); ++j)
        EXPECT_NEAR(intersection_area(a, polygon_bounds(g.plan.rooms[j].polygon)), 0.0, 1e-12);
    }
    EXPECT_NEAR(area, p.total_area, 1e-6);
    EXPECT_NEAR(g.plan.total_area(), p.total_area, 1e-6);
    EXPECT_NO_THROW(g.plan.validate());
  }
}

TEST(GenerateFloorplan, DeterministicPerSeed) {
  const FloorplanParams p = three_room_params();
  const auto a = generate_floorplan(p, 42), b = generate_floorplan(p, 42), c = generate_floorplan(p, 43);
  EXPECT_EQ(to_json(a.plan).dump(), to_json(b.plan).dump());
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.plan.id, "plan-42");
  EXPECT_NE(c.plan.id, a.plan.id);
}

TEST(GenerateFloorplan, ReturnsBestSeenLayout) {
  FloorplanParams p = three_room_params();
  FloorplanParams none = p;
  none.anneal.steps = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GeneratedFloorplan g = generate_floorplan(p, seed);
    EXPECT_NEAR(g.energy, layout_energy(layout_of(g.plan), p), 1e-9);
    EXPECT_LE(g.energy, generate_floorplan(none, seed).energy);
  }
}

TEST(GenerateFloorplan, SingleRoomCoversPlanWithSquarenessOnly) {
  FloorplanParams p;
  p.total_area = 20.0;
  p.room_specs = {{RoomType::kLiving, 1.0}};
  const GeneratedFloorplan g = generate_floorplan(p, 1);
  ASSERT_EQ(g.plan.rooms.size(), 1u);
  EXPECT_NEAR(g.plan.total_area(), 20.0, 1e-9);
  const EnergyTerms t = layout_energy_terms(layout_of(g.plan), p);
  EXPECT_NEAR(t.area + t.count + t.adjacency, 0.0, 1e-12);
  EXPECT_NEAR(g.energy, t.squareness, 1e-12);
  EXPECT_NEAR(t.squareness, 0.25 * 0.25, 1e-9);  // aspect 1.25
}

TEST(GenerateFloorplan, RequiredAdjacencyHoldsAcrossSeeds) {
  const FloorplanParams p = three_room_params();
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    failures += !has_edge(generate_floorplan(p, seed).plan, RoomType::kBedroom, RoomType::kLiving);
  EXPECT_EQ(failures, 0);
}

TEST(GenerateFloorplan, HigherSquarenessWeightGivesSquarerRooms) {
  FloorplanParams lo = three_room_params();
  lo.room_specs = {{RoomType::kLiving, 0.3}, {RoomType::kBedroom, 0.25}, {RoomType::kBedroom, 0.25}, {RoomType::kKitchen, 0.2}};
  FloorplanParams hi = lo;
  hi.squareness_weight = 10.0 * lo.squareness_weight;
  double dev_lo = 0.0, dev_hi = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    dev_lo += mean_aspect_deviation(generate_floorplan(lo, seed).plan);
    dev_hi += mean_aspect_deviation(generate_floorplan(hi, seed).plan);
  }
  EXPECT_LT(dev_hi, dev_lo);
}

TEST(GenerateFloorplan, InfeasibleAndInvalidSpecs) {
  FloorplanParams p;
  p.total_area = 10.0;
  p.room_specs.assign(3, {RoomType::kBedroom, 0.3});
  EXPECT_THROW(generate_floorplan(p, 0), InfeasibleError);
  p.total_area = 60.0;
  p.room_specs.assign(3, {RoomType::kBedroom, 0.5});
  EXPECT_THROW(generate_floorplan(p, 0), InvalidArgument);
  p.room_specs.clear();
  EXPECT_THROW(generate_floorplan(p, 0), InvalidArgument);
  p = three_room_params();
  p.anneal.cooling_rate = 1.0;
  EXPECT_THROW(generate_floorplan(p, 0), InvalidArgument);
}

TEST(GenerateFloorplan, ScoresWellAgainstItsOwnSpec) {
  const FloorplanParams p = three_room_params();
  RoomGraph gt;
  for (std::size_t i = 0; i < p.room_specs.size(); ++i)
    gt.nodes.push_back({std::to_string(i), p.room_specs[i].type, p.total_area * p.room_specs[i].target_ratio});
  gt.edges = {{"0", "1"}};
  const GeneratedFloorplan g = generate_floorplan(p, 7);
  const NodeScore ns = s_node(g.graph, gt);
  EXPECT_DOUBLE_EQ(ns.score, 1.0);
  EXPECT_GT(s_constraint(g.graph, gt), 0.9);
}

// ---------------------------------------------------------------------------
// Prompt bridge

TEST(MockLlm, TwoBedroomApartmentWithKitchen) {
  MockLlmClient mock;
  const FloorplanParams p = params_from_prompt("two bedroom apartment with kitchen", mock);
  EXPECT_EQ(count_type(p, RoomType::kBedroom), 2);
  EXPECT_EQ(count_type(p, RoomType::kKitchen), 1);
  EXPECT_EQ(count_type(p, RoomType::kLiving), 1);
  EXPECT_EQ(p.room_specs.size(), 4u);
  double sum = 0.0;
  for (const auto& s : p.room_specs) sum += s.target_ratio;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(p.squareness_weight, kSquarenessDefault);
}

TEST(MockLlm, SquareRoomsSelectHighSquareness) {
  MockLlmClient mock;
  EXPECT_EQ(params_from_prompt("make all rooms square", mock).squareness_weight, kSquarenessHigh);
}

TEST(MockLlm, IsAPureFunctionOfThePrompt) {
  MockLlmClient a, b;
  const nlohmann::json schema = floorplan_params_schema();
  for (const char* prompt : {"3 bedrooms, 2 bathrooms and an office", "studio", "dining room and kitchen"}) {
    EXPECT_EQ(a.send(prompt, schema), b.send(prompt, schema));
    EXPECT_EQ(a.send(prompt, schema), a.send(prompt, schema));
  }
  std::vector<std::string> w;
  const FloorplanParams p = parse_floorplan_params(a.send("3 bedrooms, 2 bathrooms and an office", schema), w);
  EXPECT_EQ(count_type(p, RoomType::kBedroom), 3);
  EXPECT_EQ(count_type(p, RoomType::kBathroom), 2);
  EXPECT_EQ(count_type(p, RoomType::kOffice), 1);
  EXPECT_TRUE(w.empty());
}

TEST(PromptBridge, MalformedReplyRaisesSchemaViolationWithRawText) {
  ScriptedClient client;
  client.replies = {"Sure! Here is your floor plan: {rooms: three}"};
  try {
    params_from_prompt("anything", client);
    FAIL() << "expected SchemaViolation";
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.raw_response(), client.replies[0]);
  }
  EXPECT_EQ(client.calls, 1 + kPromptRetries);
}

TEST(PromptBridge, RetriesRecoverFromOneBadReply) {
  MockLlmClient mock;
  ScriptedClient client;
  client.replies = {R"({"total_area": 50})", mock.send("one bedroom", floorplan_params_schema())};
  const FloorplanParams p = params_from_prompt("one bedroom", client);
  EXPECT_EQ(client.calls, 2);
  EXPECT_EQ(count_type(p, RoomType::kBedroom), 1);
}

TEST(PromptBridge, UnknownKeysAndRoomTypesAreViolations) {
  MockLlmClient mock;
  nlohmann::json good = nlohmann::json::parse(mock.send("one bedroom", floorplan_params_schema()));
  std::vector<std::string> w;
  nlohmann::json extra = good;
  extra["garden"] = true;
  EXPECT_THROW(parse_floorplan_params(extra.dump(), w), SchemaViolation);
  nlohmann::json badtype = good;
  badtype["rooms"][0]["type"] = "ballroom";
  EXPECT_THROW(parse_floorplan_params(badtype.dump(), w), SchemaViolation);
  nlohmann::json str = good;
  str["total_area"] = "big";
  EXPECT_THROW(parse_floorplan_params(str.dump(), w), SchemaViolation);
}

TEST(PromptBridge, OutOfRangeValuesAreClampedWithWarnings) {
  MockLlmClient mock;
  nlohmann::json j = nlohmann::json::parse(mock.send("two bedroom apartment with kitchen", floorplan_params_schema()));
  j["total_area"] = 5.0;
  j["squareness_weight"] = 1e6;
  j["anneal"]["cooling_rate"] = 1.5;
  for (auto& r : j["rooms"]) r["area_ratio"] = 0.6;
  std::vector<std::string> w;
  const FloorplanParams p = parse_floorplan_params(j.dump(), w);
  EXPECT_EQ(p.total_area, 10.0);
  EXPECT_EQ(p.squareness_weight, 100.0);
  EXPECT_LT(p.anneal.cooling_rate, 1.0);
  double sum = 0.0;
  for (const auto& s : p.room_specs) sum += s.target_ratio;
  EXPECT_LE(sum, 1.05 + 1e-12);
  EXPECT_GE(w.size(), 4u);
  EXPECT_NO_THROW(p.validate());
}

TEST(PromptBridge, TransportErrorsAreNotRetriedAsSchemaErrors) {
  FailingClient client;
  EXPECT_THROW(params_from_prompt("x", client), TransportError);
  EXPECT_EQ(client.calls, 1);
}

// ---------------------------------------------------------------------------
// HTTP client against a local server

TEST(HttpLlm, RedactsSecrets) {
  EXPECT_EQ(redact("Bearer abc123 and abc123", "abc123"), "Bearer *** and ***");
  EXPECT_EQ(redact("nothing", ""), "nothing");
}

TEST(HttpLlm, RejectsMalformedEndpoint) {
  EXPECT_THROW(HttpLlmClient(HttpLlmConfig{"ftp://x", "", "m", 1, 1, 0}), InvalidArgument);
}

TEST(HttpLlm, SendsBearerTokenAndRetriesServerErrors) {
  httplib::Server srv;
  std::atomic<int> hits{0};
  std::string auth, model;
  MockLlmClient mock;
  const std::string content = mock.send("two bedroom apartment with kitchen", floorplan_params_schema());
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    model = body.at("model");
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  HttpLlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.token = "sk-test";
  cfg.model = "test-model";
  cfg.timeout_seconds = 5;
  cfg.backoff_ms = 1;
  HttpLlmClient client(cfg);
  const FloorplanParams p = params_from_prompt("two bedroom apartment with kitchen", client);
  EXPECT_EQ(count_type(p, RoomType::kBedroom), 2);
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(model, "test-model");

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/missing";
  cfg.max_attempts = 3;
  EXPECT_THROW(HttpLlmClient(cfg).send("x", {}), TransportError);
  srv.stop();
  th.join();
}
