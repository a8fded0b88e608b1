// Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and budgets are fixed below.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scenegen/diffusion.hpp"
#include "scenegen/guidance.hpp"
#include "scenegen/metrics.hpp"
#include "scenegen/postopt.hpp"
#include "scenegen/toy.hpp"
#include "scenegen/training.hpp"

using namespace scenegen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

constexpr double kLambda = 1000.0;
constexpr int kT = 200;

std::vector<SceneLayout> sample_corpus(const Denoiser& den, const NormalizationSpec& spec, const Guidance& g,
                                       double lambda, const NoiseSchedule& sched, int count, std::uint64_t base_seed) {
  std::vector<SceneLayout> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(base_seed + static_cast<std::uint64_t>(i));
    out.push_back(generate(den, spec, g, lambda, sched, rng, base_seed + i));
  }
  return out;
}

double mean_r_acoll(const std::vector<SceneLayout>& scenes, const AssetCatalog& cat) {
  double s = 0.0;
  for (const auto& sc : scenes) s += r_acoll(sc, cat);
  return s / static_cast<double>(scenes.size());
}

// ---------------------------------------------------------------------------
// 1. Oracle sampler fidelity

Outcome criterion1() {
  Stopwatch sw;
  const NoiseSchedule sched = default_schedule(kT);
  GaussianMixture mix;
  Eigen::Vector2d m0(-1.5, 0.5), m1(1.0, -1.0);
  mix.components.push_back(GaussianMixture::isotropic(0.3, m0, 0.05));
  mix.components.push_back(GaussianMixture::isotropic(0.7, m1, 0.05));
  const Denoiser den = mixture_denoiser(mix, sched);
  const int n = 10000;
  Rng rng(11);
  std::array<int, 2> count{0, 0};
  std::array<Eigen::Vector2d, 2> sum{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  for (int i = 0; i < n; ++i) {
    const VectorXd x = sample_state(den, 2, {}, 0.0, sched, rng);
    // Assign by posterior responsibility under the data mixture.
    double best = -1e300;
    int k_best = 0;
    for (int k = 0; k < 2; ++k) {
      const auto& c = mix.components[k];
      const double lp = std::log(c.weight) - 0.5 * ((x - c.mean).array().square() / c.var.array()).sum();
      if (lp > best) best = lp, k_best = k;
    }
    ++count[k_best];
    sum[k_best] += x;
  }
  double w_err = 0.0, m_err = 0.0;
  for (int k = 0; k < 2; ++k) {
    w_err = std::max(w_err, std::abs(count[k] / static_cast<double>(n) - mix.components[k].weight));
    const Eigen::Vector2d mean = sum[k] / std::max(1, count[k]);
    m_err = std::max(m_err, (mean - mix.components[k].mean).cwiseAbs().maxCoeff());
  }
  const double secs = sw.seconds();
  return {w_err <= 0.03 && m_err <= 0.05 && secs < 60.0,
          "max |w - w*| " + fmt("%.4f", w_err) + " (<= 0.03), max |mu - mu*| " + fmt("%.4f", m_err) +
              " (<= 0.05), " + fmt("%.1f", secs) + " s (< 60 s)"};
}

// ---------------------------------------------------------------------------
// 2. Gradient suite

VectorXd random_state(const StateLayout& L, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  VectorXd x(L.state_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = n01(rng);
  for (int i = 0; i < L.n_max; ++i)
    for (int c = 0; c <= L.num_classes; ++c) x[L.slot_offset(i) + StateLayout::kLogits + c] *= 3.0;
  return x;
}

// Articulated scenes packed into a 2.5 m square so extended boxes overlap.
VectorXd random_articulated_state(const NormalizationSpec& spec, const AssetCatalog& cat, std::mt19937_64& rng) {
  const StateLayout& L = spec.layout;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, L.num_classes - 1), quarter(-2, 1);
  const Vec2 c = spec.center();
  SceneLayout scene;
  scene.floorplan_id = spec.floorplan_id;
  for (int i = 0; i < L.n_max; ++i) {
    ObjectSlot s;
    s.class_logits = VectorXd::Constant(L.num_classes + 1, -3.0);
    s.class_logits[u(rng) < 0.25 ? L.num_classes : cls(rng)] = 3.0;
    s.location = Vec3(c.x() - 1.25 + 2.5 * u(rng), c.y() - 1.25 + 2.5 * u(rng), 0.2 + 0.6 * u(rng));
    s.size = Vec3(0.2 + 0.5 * u(rng), 0.2 + 0.5 * u(rng), 0.2 + 0.6 * u(rng));
    s.yaw = quarter(rng) * kPi / 2;
    s.latent = VectorXd::Zero(cat.latent_dim());
    scene.slots.push_back(s);
  }
  return normalize_scene(scene, spec);
}

Outcome criterion2() {
  Stopwatch sw;
  const AssetCatalog cat = toy::catalog();
  const NormalizationSpec spec = toy::normalization();
  const StateLayout& L = spec.layout;
  std::mt19937_64 rng(2);

  double q_err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rep % (L.n_max + 1);
    const GradientCheckResult r = check_gradient(quantity_potential(L, n), random_state(L, rng), 3e-5,
                                                 [&](const VectorXd& s) { return quantity_regime(s, L, n); });
    q_err = std::max(q_err, r.max_rel_error);
  }

  // Location and size channels; orientation carries no analytic gradient.
  const ClassArticulations arts = class_articulations(cat);
  const Potential phi = articoll_potential(spec, cat);
  std::vector<Eigen::Index> coords;
  for (int i = 0; i < L.n_max; ++i)
    for (int k = 0; k < 6; ++k) coords.push_back(L.slot_offset(i) + k);
  double a_err = 0.0;
  int active = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd x = random_articulated_state(spec, cat, rng);
    auto embed = [&](const VectorXd& z) {
      VectorXd y = x;
      for (std::size_t j = 0; j < coords.size(); ++j) y[coords[j]] = z[j];
      return y;
    };
    auto project = [&](const VectorXd& y) {
      VectorXd z(coords.size());
      for (std::size_t j = 0; j < coords.size(); ++j) z[j] = y[coords[j]];
      return z;
    };
    const Potential restricted = [&](const VectorXd& z) {
      const PotentialValue v = phi(embed(z));
      return PotentialValue{v.value, project(v.gradient)};
    };
    active += phi(x).value > 0.0;
    const GradientCheckResult r = check_gradient(
        restricted, project(x), 1e-6, [&](const VectorXd& z) { return articoll_regime(embed(z), spec, arts); }, 1e-5);
    a_err = std::max(a_err, r.max_rel_error);
  }
  const double secs = sw.seconds();
  return {q_err < 1e-6 && a_err < 1e-4 && secs < 30.0,
          "phi_quantity max rel err " + fmt("%.2e", q_err) + " (< 1e-6), phi_articoll " + fmt("%.2e", a_err) +
              " (< 1e-4) with " + std::to_string(active) + "/100 colliding configs, " + fmt("%.1f", secs) +
              " s (< 30 s)"};
}

// ---------------------------------------------------------------------------
// 3. Quantity control

Outcome criterion3() {
  Stopwatch sw;
  const NoiseSchedule sched = default_schedule(kT);
  const AssetCatalog cat = toy::catalog();
  const NormalizationSpec spec = toy::normalization();
  const Denoiser den = mixture_denoiser(toy::quantity_mixture(spec, cat), sched);
  const auto unguided = sample_corpus(den, spec, {}, 0.0, sched, 100, 30000);
  bool ok = true;
  std::string detail;
  for (int n = 2; n <= 6; ++n) {
    GuidedSampleConfig cfg;
    cfg.lambda = kLambda;
    cfg.gamma_quantity = 1.0;
    cfg.n_target = n;
    const auto guided = sample_corpus(den, spec, make_guidance(cfg, spec, cat), kLambda, sched, 100, 30000);
    const double sg = sr_quantity(guided, n), su = sr_quantity(unguided, n);
    ok = ok && sg >= 0.90 && su < sg;
    detail += "N=" + std::to_string(n) + " " + fmt("%.2f", sg) + " vs " + fmt("%.2f", su) + "; ";
  }
  const double secs = sw.seconds();
  return {ok && secs < 600.0,
          "SR guided vs unguided: " + detail + "need >= 0.90 and strictly above unguided, " + fmt("%.1f", secs) +
              " s (< 600 s)"};
}

// ---------------------------------------------------------------------------
// 4. Articulated-collision control

Outcome criterion4() {
  Stopwatch sw;
  const NoiseSchedule sched = default_schedule(kT);
  const AssetCatalog cat = toy::catalog();
  const NormalizationSpec spec = toy::normalization();
  const Denoiser den = mixture_denoiser(toy::articulated_mixture(spec, cat), sched);
  GuidedSampleConfig cfg;
  cfg.lambda = kLambda;
  cfg.gamma_articoll = 1.0;
  const double base = mean_r_acoll(sample_corpus(den, spec, {}, 0.0, sched, 100, 40000), cat);
  const double guided =
      mean_r_acoll(sample_corpus(den, spec, make_guidance(cfg, spec, cat), kLambda, sched, 100, 40000), cat);
  const double secs = sw.seconds();
  const double ratio = base > 0.0 ? guided / base : 1.0;
  return {base > 0.0 && ratio <= 0.7 && secs < 600.0,
          "mean R_acoll unguided " + fmt("%.3f", base) + ", guided " + fmt("%.3f", guided) + ", ratio " +
              fmt("%.2f", ratio) + " (<= 0.70), " + fmt("%.1f", secs) + " s (< 600 s)"};
}

// ---------------------------------------------------------------------------
// 5. Walkable optimization

std::vector<double> taus() {
  std::vector<double> t;
  for (int k = 0; k <= 7; ++k) t.push_back(0.60 + 0.05 * k);
  return t;
}

Outcome criterion5() {
  Stopwatch sw;
  const NoiseSchedule sched = default_schedule(kT);
  const AssetCatalog cat = toy::catalog();
  const FloorPlan plan = toy::plan();
  const NormalizationSpec spec = toy::normalization();
  const Denoiser den = mixture_denoiser(toy::crowded_mixture(spec, cat), sched);
  std::vector<SceneLayout> base = sample_corpus(den, spec, {}, 0.0, sched, 100, 50000);
  // Synthetic rule-based scenes join the monotonicity check.
  std::vector<SceneLayout> fixtures = base;
  for (int i = 0; i < 100; ++i) {
    std::mt19937_64 rng(60000 + i);
    fixtures.push_back(toy::synthetic_scene(plan, cat, toy::kNMax, rng, i));
  }
  WalkableConfig wcfg;
  wcfg.tau = 0.95;
  int decreases = 0;
  std::vector<SceneLayout> optimized;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const WalkableResult r = optimize_walkable(fixtures[i], plan, cat, wcfg);
    for (std::size_t k = 1; k < r.trace.size(); ++k) decreases += r.trace[k].ratio < r.trace[k - 1].ratio;
    decreases += walkable_ratio_naive(r.scene, plan) < walkable_ratio_naive(fixtures[i], plan);
    if (i < base.size()) optimized.push_back(r.scene);
  }
  const std::vector<const FloorPlan*> plans(base.size(), &plan);
  bool dominates = true;
  std::string detail;
  for (double tau : taus()) {
    const double b = sr_walkable(base, plans, tau), o = sr_walkable(optimized, plans, tau);
    dominates = dominates && o >= b;
    detail += fmt("%.2f", tau) + ":" + fmt("%.2f", b) + "->" + fmt("%.2f", o) + " ";
  }
  const double secs = sw.seconds();
  return {decreases == 0 && dominates && secs < 120.0,
          std::to_string(decreases) + " ratio decreases over " + std::to_string(fixtures.size()) +
              " fixtures; SR(tau) baseline->optimized " + detail + "; " + fmt("%.1f", secs) + " s (< 120 s)"};
}

// ---------------------------------------------------------------------------
// 6. Metric exactness

struct MatchOracle {
  int max_card = 0;
  int max_edges = 0;
};

MatchOracle enumerate_matchings(const RoomGraph& gen, const RoomGraph& gt) {
  const int n = static_cast<int>(gen.nodes.size()), m = static_cast<int>(gt.nodes.size());
  auto adj = [](const RoomGraph& g) {
    std::vector<std::vector<char>> a(g.nodes.size(), std::vector<char>(g.nodes.size(), 0));
    for (const auto& [x, y] : g.edges) {
      const int i = g.index_of(x), j = g.index_of(y);
      a[i][j] = a[j][i] = 1;
    }
    return a;
  };
  const auto ag = adj(gen), at = adj(gt);
  MatchOracle best;
  std::vector<int> map(n, -1);
  std::vector<char> used(m, 0);
  std::function<void(int, int)> rec = [&](int i, int card) {
    if (i == n) {
      int e = 0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          if (ag[a][b] && map[a] >= 0 && map[b] >= 0 && at[map[a]][map[b]]) ++e;
      if (card > best.max_card) best = {card, e};
      else if (card == best.max_card) best.max_edges = std::max(best.max_edges, e);
      return;
    }
    rec(i + 1, card);
    for (int j = 0; j < m; ++j) {
      if (used[j] || gen.nodes[i].type != gt.nodes[j].type) continue;
      used[j] = 1;
      map[i] = j;
      rec(i + 1, card + 1);
      map[i] = -1;
      used[j] = 0;
    }
  };
  rec(0, 0);
  return best;
}

RoomGraph random_graph(std::mt19937_64& rng, int max_nodes) {
  std::uniform_int_distribution<int> nn(0, max_nodes), ty(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RoomGraph g;
  const int n = nn(rng);
  for (int i = 0; i < n; ++i) g.nodes.push_back({std::to_string(i), static_cast<RoomType>(ty(rng)), 5 + 20 * u(rng)});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < 0.4) g.edges.emplace_back(std::to_string(i), std::to_string(j));
  return g;
}

RoomGraph graph(std::vector<std::pair<RoomType, double>> nodes) {
  RoomGraph g;
  for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes.push_back({std::to_string(i), nodes[i].first, nodes[i].second});
  return g;
}

ObjectSlot box_slot(int cls, int num_classes, const Vec2& xy, const Vec3& half) {
  ObjectSlot s;
  s.class_logits = VectorXd::Constant(num_classes + 1, -5.0);
  s.class_logits[cls] = 5.0;
  s.location = Vec3(xy.x(), xy.y(), half.z());
  s.size = half;
  s.latent = VectorXd::Zero(4);
  return s;
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  int graph_mismatch = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const RoomGraph gen = random_graph(rng, 6), gt = random_graph(rng, 6);
    const MatchOracle o = enumerate_matchings(gen, gt);
    const NodeScore ns = s_node(gen, gt);
    const double vd = static_cast<double>(std::max(gen.nodes.size(), gt.nodes.size()));
    const double ed = static_cast<double>(std::max(gen.edges.size(), gt.edges.size()));
    const double node_ref = vd == 0 ? 1.0 : o.max_card / vd;
    const double edge_ref = ed == 0 ? 1.0 : o.max_edges / ed;
    graph_mismatch += ns.score != node_ref || s_edge(gen, gt, ns.matching) != edge_ref;
  }

  // Hand cases: per-type area fractions, 1 - half the L1 distance.
  double hand_err = 0.0;
  hand_err = std::max(hand_err, std::abs(s_constraint(graph({{RoomType::kBedroom, 5}, {RoomType::kLiving, 3},
                                                              {RoomType::kBathroom, 2}}),
                                                       graph({{RoomType::kBedroom, 4}, {RoomType::kLiving, 4},
                                                              {RoomType::kKitchen, 2}})) -
                                          0.7));
  hand_err = std::max(hand_err, std::abs(s_constraint(graph({{RoomType::kBedroom, 5}}), graph({{RoomType::kKitchen, 5}}))));
  hand_err = std::max(hand_err, std::abs(s_constraint(graph({{RoomType::kBedroom, 2}, {RoomType::kBedroom, 2},
                                                              {RoomType::kLiving, 4}}),
                                                       graph({{RoomType::kBedroom, 1}, {RoomType::kLiving, 1}})) -
                                          1.0));

  std::vector<SceneLayout> corpus;
  const AssetCatalog cat = toy::catalog();
  for (int i = 0; i < 50; ++i) {
    std::mt19937_64 r(700 + i);
    corpus.push_back(toy::synthetic_scene(toy::plan(), cat, toy::kNMax, r, i));
  }
  const double ckl_same = ckl(corpus, corpus, cat.num_classes());

  std::uniform_real_distribution<double> u(0.0, 1.0);
  int col_mismatch = 0;
  for (int rep = 0; rep < 200; ++rep) {
    SceneLayout s;
    const int n = 1 + static_cast<int>(u(rng) * 8);
    for (int i = 0; i < n; ++i)
      s.slots.push_back(box_slot(0, 1, {6 * u(rng), 6 * u(rng)}, {0.1 + 0.6 * u(rng), 0.1 + 0.6 * u(rng), 0.3}));
    int flagged = 0;
    for (int i = 0; i < n; ++i) {
      bool hit = false;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const Aabb3 a = static_box(s.slots[i]), b = static_box(s.slots[j]);
        hit |= a.lo.x() < b.hi.x() && b.lo.x() < a.hi.x() && a.lo.y() < b.hi.y() && b.lo.y() < a.hi.y() &&
               a.lo.z() < b.hi.z() && b.lo.z() < a.hi.z();
      }
      flagged += hit;
    }
    col_mismatch += col_obj(s) != static_cast<double>(flagged) / n;
  }
  return {graph_mismatch == 0 && hand_err <= 1e-12 && ckl_same <= 1e-5 && col_mismatch == 0,
          std::to_string(graph_mismatch) + "/500 graph mismatches vs enumeration, s_constraint hand err " +
              fmt("%.1e", hand_err) + " (<= 1e-12), CKL(identical) " + fmt("%.1e", ckl_same) + " (<= 1e-5), " +
              std::to_string(col_mismatch) + "/200 col_obj mismatches vs O(N^2)"};
}

// ---------------------------------------------------------------------------
// 7. Naive vs raster walkable ratio

Outcome criterion7() {
  const FloorPlan room = make_rect_plan("room", 6.0, 6.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    // Boxes in distinct cells of a 0.5 m lattice, so footprints are disjoint.
    std::vector<int> cells(144);
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    SceneLayout s;
    s.floorplan_id = "room";
    const int n = 1 + static_cast<int>(u(rng) * 12);
    for (int i = 0; i < n; ++i) {
      ObjectSlot o = box_slot(0, 1, {0.25 + 0.5 * (cells[i] % 12), 0.25 + 0.5 * (cells[i] / 12)},
                              {0.05 + 0.2 * u(rng), 0.05 + 0.2 * u(rng), 0.3});
      o.yaw = u(rng) < 0.5 ? 0.0 : kPi / 2;
      s.slots.push_back(o);
    }
    worst = std::max(worst, std::abs(walkable_ratio_naive(s, room) - walkable_ratio_raster(s, room, 0.05)));
  }
  return {worst <= 1e-3, "max |naive - raster| " + fmt("%.2e", worst) + " over 200 scenes at 5 cm (<= 1e-3)"};
}

// ---------------------------------------------------------------------------
// 8. Training loop sanity

Outcome criterion8() {
  // (a) lambda = 0 loss is L_simple, and its parameter gradient matches
  // central differences on an H = 8 network.
  const NoiseSchedule sched = default_schedule(kT);
  MlpArch arch;
  arch.state_dim = 6;
  arch.hidden = 8;
  arch.time_dim = 4;
  arch.cond_dim = 3;
  DenoiserParams p = init_denoiser(arch, 8);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<TrainSample> batch;
  for (int i = 0; i < 5; ++i) {
    TrainSample s;
    s.x0 = VectorXd::NullaryExpr(arch.state_dim, [&] { return n01(rng); });
    s.cond = VectorXd::NullaryExpr(arch.cond_dim, [&] { return n01(rng); });
    batch.push_back(s);
  }
  Rng draw_rng(9);
  const auto draws = draw_noise(batch, sched, draw_rng);
  VectorXd grad;
  const double loss = guided_loss(p, batch, draws, 0.0, sched, &grad);
  double simple = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const VectorXd x_t = forward_sample(batch[j].x0, draws[j].t, draws[j].eps, sched);
    simple += (draws[j].eps - forward(p, x_t, draws[j].t, batch[j].cond)).squaredNorm();
  }
  simple /= static_cast<double>(arch.state_dim * batch.size());
  double g_err = 0.0;
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < p.data.size(); ++k) {
    DenoiserParams q = p;
    q.data[k] += h;
    const double fp = guided_loss(q, batch, draws, 0.0, sched);
    q.data[k] -= 2 * h;
    const double fm = guided_loss(q, batch, draws, 0.0, sched);
    const double fd = (fp - fm) / (2 * h);
    g_err = std::max(g_err, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-6}));
  }
  const double l_err = std::abs(loss - simple) / simple;

  // (b) Point-mass overfit: one toy scene (two slots), evaluated on fresh draws.
  Stopwatch sw;
  const AssetCatalog cat = toy::catalog();
  const FloorPlan plan = toy::plan();
  const NormalizationSpec spec = toy::normalization(2);
  std::mt19937_64 srng(1);
  const TrainSample point{normalize_scene(toy::synthetic_scene(plan, cat, 2, srng, 0), spec), encode_floorplan(plan),
                          nullptr};
  const std::vector<TrainSample> pm(32, point);
  MlpArch parch;
  parch.state_dim = static_cast<int>(point.x0.size());
  parch.hidden = 128;
  const int steps = 20000;
  AdamConfig adam;
  adam.lr = 1e-3;
  adam.lr_step_size = steps / 3;
  adam.lr_decay = 0.3;
  Trainer trainer(init_denoiser(parch, 7), sched, adam);
  for (int k = 0; k < steps; ++k) {
    Rng r(1000 + k);
    trainer.train_step(pm, 0.0, r);
  }
  Rng ev(99);
  double final_loss = 0.0;
  for (int k = 0; k < 20; ++k) final_loss += guided_loss(trainer.params(), pm, draw_noise(pm, sched, ev), 0.0, sched) / 20;
  const double secs = sw.seconds();
  return {l_err < 1e-12 && g_err < 1e-4 && final_loss < 0.05 && secs < 120.0,
          "|L(lambda=0) - L_simple| rel " + fmt("%.1e", l_err) + ", gradient vs FD max rel err " + fmt("%.2e", g_err) +
              " (< 1e-4, H=8); point-mass loss " + fmt("%.4f", final_loss) + " (< 0.05) after " +
              std::to_string(steps) + " steps in " + fmt("%.1f", secs) + " s (< 120 s)"};
}

// ---------------------------------------------------------------------------
// 9. Ablation shape

Outcome criterion9() {
  const NoiseSchedule sched = default_schedule(kT);
  const AssetCatalog cat = toy::catalog();
  const FloorPlan plan = toy::plan();
  const NormalizationSpec spec = toy::normalization();
  const Denoiser den = mixture_denoiser(toy::crowded_mixture(spec, cat), sched);
  GuidedSampleConfig gcfg;
  gcfg.lambda = kLambda;
  gcfg.gamma_articoll = 1.0;
  const Guidance articoll = make_guidance(gcfg, spec, cat);
  WalkableConfig wcfg;
  wcfg.tau = 0.8;
  auto optimize_all = [&](std::vector<SceneLayout> scenes) {
    for (auto& s : scenes) s = optimize_walkable(s, plan, cat, wcfg).scene;
    return scenes;
  };
  const auto none = sample_corpus(den, spec, {}, 0.0, sched, 100, 90000);
  const auto art_only = sample_corpus(den, spec, articoll, kLambda, sched, 100, 90000);
  const auto walk_only = optimize_all(none);
  const auto both = optimize_all(art_only);
  const std::vector<const FloorPlan*> plans(100, &plan);
  auto row = [&](const char* name, const std::vector<SceneLayout>& s) {
    return std::string(name) + " r_acoll " + fmt("%.3f", mean_r_acoll(s, cat)) + " SR(0.8) " +
           fmt("%.2f", sr_walkable(s, plans, 0.8));
  };
  const bool ok = mean_r_acoll(both, cat) <= mean_r_acoll(art_only, cat) &&
                  sr_walkable(both, plans, 0.8) >= sr_walkable(walk_only, plans, 0.8);
  return {ok, row("none", none) + "; " + row("articoll", art_only) + "; " + row("walkable", walk_only) + "; " +
                  row("both", both)};
}

// ---------------------------------------------------------------------------
// 10. Reproducibility through the CLI

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Byte comparison of two artifact trees; returns the first difference.
std::string tree_diff(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) return "file lists differ";
  if (fa.empty()) return "no artifacts";
  for (const auto& f : fa)
    if (read_file(a / f) != read_file(b / f)) return f.string() + " differs";
  return "";
}

Outcome criterion10(const std::string& cli, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path tcfg = work / "train.json";
  {
    std::ofstream f(tcfg);
    f << R"({"schedule": {"T": 50}, "train": {"corpus_size": 16, "batch_size": 8, "hidden": 16, "epochs": 2},
             "guidance": {"quantity_t_max": 50}})";
  }
  struct Command {
    std::string name;
    std::function<std::string(const fs::path&, int)> args;  // output root, worker count
  };
  const fs::path samples = work / "ref_samples";
  const std::vector<Command> commands = {
      {"sample",
       [&](const fs::path& o, int w) {
         return "--seed 4 --workers " + std::to_string(w) + " --out " + (o / "out").string() +
                " sample --oracle-mixture articulated --count 12 --lambda 1000 --gamma-articoll 1";
       }},
      {"optimize",
       [&](const fs::path& o, int w) {
         return "--workers " + std::to_string(w) + " --out " + (o / "out").string() + " optimize --scenes " +
                samples.string() + " --tau 0.9";
       }},
      {"evaluate",
       [&](const fs::path& o, int w) {
         return "--workers " + std::to_string(w) + " --out " + (o / "out").string() + " evaluate --scenes " +
                samples.string() + " --n-targets 3,4";
       }},
      {"floorplan",
       [&](const fs::path& o, int) {
         return "--seed 9 --out " + (o / "out" / "plan.json").string() +
                " floorplan --mock-llm --prompt 'three bedrooms, a kitchen and a bathroom'";
       }},
      {"export-svg",
       [&](const fs::path& o, int) {
         return "--out " + (o / "out" / "scene.svg").string() + " export-svg --walkable --scene " +
                (samples / "scene_0000.json").string();
       }},
      {"train",
       [&](const fs::path& o, int) {
         return "--config " + tcfg.string() + " --seed 3 --out " + (o / "out").string() + " train";
       }},
  };
  auto run = [&](const std::string& args) {
    const std::string cmd = "'" + cli + "' --log-level off " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (run("--seed 4 --out " + samples.string() + " sample --oracle-mixture articulated --count 12") != 0)
    return {false, "could not produce input scenes"};
  std::string detail;
  bool ok = true;
  for (const auto& c : commands) {
    const fs::path a = work / (c.name + "_a"), b = work / (c.name + "_b");
    const int ra = run(c.args(a, 1)), rb = run(c.args(b, 3));
    // optimize may report unmet tau (exit 1); artifacts are still written.
    const bool ran = (ra == 0 || c.name == "optimize") && ra == rb;
    const std::string diff = ran ? tree_diff(a, b) : "command failed";
    ok = ok && diff.empty();
    detail += c.name + (diff.empty() ? " identical" : " [" + diff + "]") + "; ";
  }
  return {ok, "rerun with equal config hash (1 vs 3 workers): " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the scenegen executable")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle sampler fidelity", criterion1},
      {"gradient suite", criterion2},
      {"quantity control", criterion3},
      {"articulated-collision control", criterion4},
      {"walkable optimization", criterion5},
      {"metric exactness", criterion6},
      {"naive/raster walkable consistency", criterion7},
      {"training loop sanity", criterion8},
      {"ablation shape", criterion9},
      {"reproducibility", [&] { return criterion10(cli, work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
