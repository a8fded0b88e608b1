// scenegen: command-line entry point.
//
// Exit codes: 0 success, 1 domain failure (threshold unmet, infeasible
// input, service failure), 2 usage or configuration error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/config.hpp"
#include "scenegen/denoiser.hpp"
#include "scenegen/diffusion.hpp"
#include "scenegen/floorplan_gen.hpp"
#include "scenegen/guidance.hpp"
#include "scenegen/json_io.hpp"
#include "scenegen/llm.hpp"
#include "scenegen/llm_http.hpp"
#include "scenegen/normalization.hpp"
#include "scenegen/parallel.hpp"
#include "scenegen/postopt.hpp"
#include "scenegen/report.hpp"
#include "scenegen/svg.hpp"
#include "scenegen/toy.hpp"
#include "scenegen/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scenegen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string catalog;
  std::string plans;
  std::string log_level = "info";
};

struct TrainArgs {
  std::string corpus;
  std::optional<int> epochs;
  std::string resume;
};

struct SampleArgs {
  int count = 10;
  std::string oracle;
  std::string checkpoint;
  std::string plan_id;
  std::optional<double> lambda;
  std::optional<int> n_target;
  std::optional<double> gamma_quantity;
  std::optional<double> gamma_articoll;
};

struct OptimizeArgs {
  std::string scenes;
  std::optional<double> tau;
};

struct EvaluateArgs {
  std::string scenes;
  std::string reference;
  std::string gen_graphs;
  std::string gt_graphs;
  std::vector<int> n_targets;
};

struct FloorplanArgs {
  std::string prompt;
  bool mock = false;
  std::string id;
};

struct SvgArgs {
  std::string scene;
  bool walkable = false;
};

/// A domain failure that is not an exception from the library (e.g. a
/// threshold left unmet); maps to exit code 1.
struct DomainFailure {
  std::string what;
};

// ---------------------------------------------------------------------------
// Shared plumbing

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.out.empty()) cfg.paths.out = g.out;
  if (!g.catalog.empty()) cfg.paths.catalog = g.catalog;
  if (!g.plans.empty()) cfg.paths.plans = g.plans;
  return cfg;
}

/// Hash input: the command, the resolved config without paths and worker
/// count, the command arguments, and digests of every input's contents.
std::string run_hash(const std::string& command, const RunConfig& cfg, const json& args,
                     const std::map<std::string, std::string>& inputs) {
  json c = to_json(cfg);
  c.erase("paths");
  c.erase("workers");
  json digests = json::object();
  for (const auto& [name, path] : inputs)
    if (!path.empty()) digests[name] = content_digest(path);
  return config_hash({{"command", command}, {"config", c}, {"args", args}, {"inputs", digests}});
}

/// Configured catalog, or the built-in toy catalog when none is set.
AssetCatalog resolve_catalog(const RunConfig& cfg) {
  if (cfg.paths.catalog.empty()) return toy::catalog();
  return catalog_from_json(read_json_file(cfg.paths.catalog), cfg.latent_dim);
}

std::map<std::string, FloorPlan> resolve_plans(const RunConfig& cfg) {
  if (cfg.paths.plans.empty()) {
    FloorPlan p = toy::plan();
    const std::string id = p.id;
    return {{id, std::move(p)}};
  }
  return load_plans(cfg.paths.plans);
}

fs::path out_dir(const RunConfig& cfg, const char* fallback) {
  const fs::path p = cfg.paths.out.empty() ? fs::path(fallback) : fs::path(cfg.paths.out);
  fs::create_directories(p);
  return p;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json stamp(json j, const std::string& hash, std::uint64_t seed) {
  j["config_hash"] = hash;
  j["run_seed"] = seed;
  return j;
}

// ---------------------------------------------------------------------------
// train

struct Corpus {
  std::vector<TrainSample> samples;
  std::map<std::string, NormalizationSpec> specs;
  std::map<std::string, Guidance> guidance;
  int n_max = 0;
  bool toy = false;
};

Corpus build_corpus(const RunConfig& cfg, const std::string& kind, const AssetCatalog& cat,
                    const std::map<std::string, FloorPlan>& plans) {
  Corpus c;
  c.toy = cfg.paths.catalog.empty() && cfg.paths.plans.empty();
  std::vector<SceneLayout> scenes;
  if (kind == "synthetic" || kind == "point-mass") {
    c.n_max = cfg.train.n_max;
    std::vector<const FloorPlan*> order;
    for (const auto& [id, p] : plans) order.push_back(&p);
    const int n = kind == "point-mass" ? 1 : cfg.train.corpus_size;
    for (int i = 0; i < n; ++i) {
      Rng rng = substream("train/corpus", cfg.seed, static_cast<std::uint64_t>(i));
      scenes.push_back(toy::synthetic_scene(*order[i % order.size()], cat, c.n_max, rng, static_cast<std::uint64_t>(i)));
    }
    if (kind == "point-mass")
      for (int i = 1; i < cfg.train.corpus_size; ++i) scenes.push_back(scenes.front());
  } else {
    for (auto& s : load_scene_dir(kind)) scenes.push_back(std::move(s.scene));
    if (scenes.empty()) throw ConfigError("training corpus '" + kind + "' contains no scenes");
    c.n_max = static_cast<int>(scenes.front().slots.size());
  }
  for (const auto& s : scenes) {
    auto it = plans.find(s.floorplan_id);
    if (it == plans.end()) throw ConfigError("corpus scene references unknown floorplan_id '" + s.floorplan_id + "'");
    if (!c.specs.count(s.floorplan_id)) {
      NormalizationSpec spec = make_normalization(it->second, cat, c.n_max);
      if (cfg.guidance.lambda > 0.0) c.guidance[s.floorplan_id] = make_guidance(cfg.guidance, spec, cat);
      c.specs.emplace(s.floorplan_id, std::move(spec));
    }
  }
  for (const auto& s : scenes) {
    TrainSample t;
    t.x0 = normalize_scene(s, c.specs.at(s.floorplan_id));
    t.cond = encode_floorplan(plans.at(s.floorplan_id));
    auto g = c.guidance.find(s.floorplan_id);
    t.guidance = g == c.guidance.end() ? nullptr : &g->second;
    c.samples.push_back(std::move(t));
  }
  return c;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (!a.corpus.empty()) cfg.train.corpus = a.corpus;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  cfg.validate();
  const std::string kind = cfg.train.corpus;
  if (kind != "synthetic" && kind != "point-mass" && !fs::is_directory(kind))
    throw ConfigError("train.corpus must be 'synthetic', 'point-mass' or a scene directory");

  const std::map<std::string, std::string> inputs = {{"catalog", cfg.paths.catalog},
                                                     {"plans", cfg.paths.plans},
                                                     {"corpus", fs::is_directory(kind) ? kind : ""}};
  const std::string hash = run_hash("train", cfg, json::object(), inputs);
  // Resumable runs share everything but the epoch budget.
  RunConfig lineage_cfg = cfg;
  lineage_cfg.train.epochs = 0;
  const std::string lineage = run_hash("train", lineage_cfg, json::object(), inputs);

  const AssetCatalog cat = resolve_catalog(cfg);
  const auto plans = resolve_plans(cfg);
  Corpus corpus = build_corpus(cfg, kind, cat, plans);
  const NoiseSchedule sched = cfg.schedule.make();

  MlpArch arch;
  arch.state_dim = static_cast<int>(corpus.samples.front().x0.size());
  arch.hidden = cfg.train.hidden;
  AdamConfig adam;
  adam.lr = cfg.train.lr;
  adam.max_grad_norm = cfg.train.max_grad_norm;

  int start_epoch = 0;
  json losses = json::array();
  Trainer trainer(init_denoiser(arch, substream_seed("train/init", cfg.seed)), sched, adam);
  if (!a.resume.empty()) {
    Checkpoint ck = load_checkpoint(a.resume);
    if (ck.meta.value("lineage", "") != lineage)
      throw ConfigError("checkpoint '" + a.resume + "' was trained under a different configuration");
    if (!(ck.params.arch.state_dim == arch.state_dim && ck.params.arch.hidden == arch.hidden))
      throw ConfigError("checkpoint architecture does not match the configuration");
    trainer = Trainer(ck.params, sched, adam);
    if (ck.optimizer) trainer.set_optimizer(*ck.optimizer);
    start_epoch = ck.meta.at("epoch").get<int>();
    losses = ck.meta.at("losses");
    if (start_epoch > cfg.train.epochs) throw ConfigError("checkpoint is already past the configured epoch count");
    spdlog::info("resuming from epoch {}", start_epoch);
  }

  const fs::path dir = out_dir(cfg, "train_out");
  const std::size_t n = corpus.samples.size();
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.train.batch_size), n);
  const std::size_t steps_per_epoch = (n + bs - 1) / bs;

  auto write_artifacts = [&](int epoch) {
    Checkpoint ck;
    ck.params = trainer.params();
    ck.optimizer = trainer.optimizer();
    ck.meta = {{"config_hash", hash},
               {"lineage", lineage},
               {"seed", cfg.seed},
               {"epoch", epoch},
               {"losses", losses},
               {"n_max", corpus.n_max},
               {"toy", corpus.toy},
               {"lambda", cfg.guidance.lambda},
               {"schedule", to_json(cfg)["schedule"]}};
    save_checkpoint(ck, (dir / "checkpoint.bin").string());
    std::string csv = "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\nepoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) csv += std::to_string(e + 1) + "," + fmt17(losses[e]) + "\n";
    write_text_file(dir / "loss.csv", csv);
  };

  for (int epoch = start_epoch; epoch < cfg.train.epochs; ++epoch) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle = substream("train/shuffle", cfg.seed, static_cast<std::uint64_t>(epoch));
    std::shuffle(perm.begin(), perm.end(), shuffle);
    double sum = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      std::vector<TrainSample> batch;
      for (std::size_t k = b * bs; k < std::min(n, (b + 1) * bs); ++k) batch.push_back(corpus.samples[perm[k]]);
      Rng rng = substream("train", cfg.seed, static_cast<std::uint64_t>(epoch) * steps_per_epoch + b);
      sum += trainer.train_step(batch, cfg.guidance.lambda, rng);
    }
    const double mean = sum / static_cast<double>(steps_per_epoch);
    losses.push_back(mean);
    spdlog::info("epoch {} loss {:.6f}", epoch + 1, mean);
    write_artifacts(epoch + 1);
  }
  if (start_epoch == cfg.train.epochs) write_artifacts(start_epoch);
  spdlog::info("wrote {}", (dir / "checkpoint.bin").string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const Globals& g, const SampleArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (!a.checkpoint.empty()) cfg.paths.checkpoint = a.checkpoint;
  if (a.lambda) cfg.guidance.lambda = *a.lambda;
  if (a.n_target) cfg.guidance.n_target = *a.n_target;
  if (a.gamma_quantity) cfg.guidance.gamma_quantity = *a.gamma_quantity;
  if (a.gamma_articoll) cfg.guidance.gamma_articoll = *a.gamma_articoll;
  if (a.count < 0) throw ConfigError("--count must be >= 0");
  if (!a.oracle.empty() && a.oracle != "quantity" && a.oracle != "articulated")
    throw ConfigError("--oracle-mixture must be 'quantity' or 'articulated'");
  if (a.oracle.empty() && cfg.paths.checkpoint.empty())
    throw ConfigError("sample needs a checkpoint (--checkpoint or paths.checkpoint) or --oracle-mixture");
  cfg.validate();

  NoiseSchedule sched = cfg.schedule.make();
  AssetCatalog cat = toy::catalog();
  NormalizationSpec spec;
  Denoiser denoiser;
  std::string mode;
  std::map<std::string, std::string> inputs;
  if (!a.oracle.empty()) {
    mode = "oracle-" + a.oracle;
    spec = toy::normalization();
    BlockMixture mix = a.oracle == "quantity" ? toy::quantity_mixture(spec, cat) : toy::articulated_mixture(spec, cat);
    denoiser = mixture_denoiser(std::move(mix), sched);
  } else {
    mode = "checkpoint";
    inputs["checkpoint"] = cfg.paths.checkpoint;
    Checkpoint ck = load_checkpoint(cfg.paths.checkpoint);
    RunConfig sched_cfg;
    apply_json(sched_cfg, {{"schedule", ck.meta.at("schedule")}});
    sched = sched_cfg.schedule.make();
    const bool toy_ck = ck.meta.value("toy", false);
    if (!toy_ck) {
      inputs["catalog"] = cfg.paths.catalog;
      inputs["plans"] = cfg.paths.plans;
      if (cfg.paths.catalog.empty() || cfg.paths.plans.empty())
        throw ConfigError("checkpoint was trained on external data; paths.catalog and paths.plans are required");
      cat = resolve_catalog(cfg);
    }
    const auto plans = toy_ck ? resolve_plans(RunConfig{}) : resolve_plans(cfg);
    const std::string pid = a.plan_id.empty() ? plans.begin()->first : a.plan_id;
    auto it = plans.find(pid);
    if (it == plans.end()) throw ConfigError("unknown --plan-id '" + pid + "'");
    spec = make_normalization(it->second, cat, ck.meta.at("n_max").get<int>());
    if (ck.params.arch.state_dim != spec.layout.state_dim())
      throw ConfigError("checkpoint state dimension does not match the catalog and N_max");
    denoiser = mlp_denoiser(ck.params, encode_floorplan(it->second));
  }
  cfg.guidance.validate(sched.T());
  const Guidance guidance = make_guidance(cfg.guidance, spec, cat);
  const json args = {{"count", a.count}, {"mode", mode}, {"plan_id", a.plan_id}};
  const std::string hash = run_hash("sample", cfg, args, inputs);

  struct Result {
    SceneLayout scene;
    std::vector<StepTrace> trace;
  };
  std::vector<Result> results(static_cast<std::size_t>(a.count));
  parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
    Rng rng = substream("sample", cfg.seed, i);
    results[i].scene = generate(denoiser, spec, guidance, cfg.guidance.lambda, sched, rng,
                                substream_seed("sample", cfg.seed, i), &results[i].trace);
  });

  const fs::path dir = out_dir(cfg, "samples");
  json scenes = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04zu.json", i);
    const Result& r = results[i];
    write_json_file(dir / name, stamp(to_json(r.scene), hash, cfg.seed));
    int guided = 0;
    double last = 0.0;
    for (const auto& st : r.trace)
      if (st.guided) {
        ++guided;
        last = st.potential;
      }
    scenes.push_back({{"file", name},
                      {"seed", r.scene.seed},
                      {"occupied", r.scene.occupied_count()},
                      {"guided_steps", guided},
                      {"final_potential", last}});
  }
  json manifest = {{"command", "sample"}, {"mode", mode},           {"count", a.count},
                   {"config", to_json(cfg)}, {"config_hash", hash}, {"seed", cfg.seed},
                   {"scenes", scenes}};
  manifest["config"].erase("paths");
  manifest["config"].erase("workers");
  write_json_file(dir / "manifest.json", manifest);
  spdlog::info("wrote {} scenes to {}", results.size(), dir.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// optimize

std::vector<NamedScene> load_scenes_arg(const std::string& path) {
  if (path.empty()) throw ConfigError("--scenes is required");
  if (!fs::exists(path)) throw ConfigError("path does not exist: '" + path + "'");
  if (fs::is_directory(path)) return load_scene_dir(path);
  return {{fs::path(path).stem().string(), scene_from_json(read_json_file(path))}};
}

int cmd_optimize(const Globals& g, const OptimizeArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.tau) cfg.walkable.tau = *a.tau;
  cfg.validate();
  const auto scenes = load_scenes_arg(a.scenes);
  const AssetCatalog cat = resolve_catalog(cfg);
  const auto plans = resolve_plans(cfg);
  const std::string hash =
      run_hash("optimize", cfg, json::object(),
               {{"scenes", a.scenes}, {"catalog", cfg.paths.catalog}, {"plans", cfg.paths.plans}});
  for (const auto& s : scenes)
    if (!plans.count(s.scene.floorplan_id))
      throw ConfigError("scene '" + s.name + "' references unknown floorplan_id '" + s.scene.floorplan_id + "'");

  std::vector<WalkableResult> results(scenes.size());
  parallel_for(scenes.size(), cfg.workers, [&](std::size_t i) {
    results[i] = optimize_walkable(scenes[i].scene, plans.at(scenes[i].scene.floorplan_id), cat, cfg.walkable);
  });

  const fs::path dir = out_dir(cfg, "optimized");
  json rows = json::array();
  int below = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const WalkableResult& r = results[i];
    const bool reached = r.final_ratio >= cfg.walkable.tau;
    below += !reached;
    write_json_file(dir / (scenes[i].name + ".json"), stamp(to_json(r.scene), hash, cfg.seed));
    std::string csv = "iter,ratio,raster_ratio,replacements\n";
    for (const auto& t : r.trace)
      csv += std::to_string(t.iter) + "," + fmt17(t.ratio) + "," + fmt17(t.raster_ratio) + "," +
             std::to_string(t.replacements) + "\n";
    write_text_file(dir / (scenes[i].name + "_trace.csv"), csv);
    rows.push_back({{"name", scenes[i].name},
                    {"initial_ratio", r.trace.front().ratio},
                    {"final_ratio", r.final_ratio},
                    {"iterations", r.iterations},
                    {"stop", std::string(to_string(r.stop))},
                    {"reached", reached}});
  }
  write_json_file(dir / "optimize_report.json", {{"command", "optimize"},
                                                 {"config_hash", hash},
                                                 {"seed", cfg.seed},
                                                 {"tau", cfg.walkable.tau},
                                                 {"below_tau", below},
                                                 {"scenes", rows}});
  if (below > 0) throw DomainFailure{std::to_string(below) + " scene(s) remain below tau"};
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (!a.n_targets.empty()) cfg.evaluate.n_targets = a.n_targets;
  cfg.validate();
  if (a.gen_graphs.empty() != a.gt_graphs.empty())
    throw ConfigError("--gen-graphs and --gt-graphs must be given together");
  const auto scenes = load_scenes_arg(a.scenes);
  const AssetCatalog cat = resolve_catalog(cfg);
  const auto plans = resolve_plans(cfg);
  std::optional<std::vector<NamedScene>> reference;
  if (!a.reference.empty()) reference = load_scenes_arg(a.reference);
  std::vector<GraphPair> graphs;
  if (!a.gen_graphs.empty()) graphs = load_graph_pairs(a.gen_graphs, a.gt_graphs);
  const std::string hash = run_hash("evaluate", cfg, json::object(),
                                    {{"scenes", a.scenes},
                                     {"catalog", cfg.paths.catalog},
                                     {"plans", cfg.paths.plans},
                                     {"reference", a.reference},
                                     {"gen_graphs", a.gen_graphs},
                                     {"gt_graphs", a.gt_graphs}});

  const MetricReport rep =
      evaluate_corpus(scenes, plans, cat, reference ? &*reference : nullptr, graphs, cfg.evaluate, cfg.workers);
  const auto failed = threshold_failures(rep, cfg.evaluate);

  const fs::path dir = out_dir(cfg, "evaluation");
  json j = to_json(rep);
  j["command"] = "evaluate";
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  j["threshold_failures"] = failed;
  write_json_file(dir / "report.json", j);
  write_text_file(dir / "report.csv",
                  "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\n" + to_csv(rep));
  for (const auto& [k, v] : rep.summary) spdlog::info("{} = {:.6f}", k, v);
  if (!failed.empty()) throw DomainFailure{"thresholds failed: " + json(failed).dump()};
  return kExitOk;
}

// ---------------------------------------------------------------------------
// floorplan

json params_to_json(const FloorplanParams& p) {
  json rooms = json::array();
  for (const auto& r : p.room_specs) rooms.push_back({{"type", std::string(to_string(r.type))}, {"ratio", r.target_ratio}});
  json adj = json::array();
  for (const auto& [x, y] : p.required_adjacencies) adj.push_back({std::string(to_string(x)), std::string(to_string(y))});
  return {{"total_area", p.total_area},
          {"rooms", rooms},
          {"adjacency", adj},
          {"squareness_weight", p.squareness_weight},
          {"adjacency_weight", p.adjacency_weight},
          {"area_weight", p.area_weight},
          {"count_weight", p.count_weight},
          {"anneal", {{"initial_temp", p.anneal.initial_temp}, {"cooling_rate", p.anneal.cooling_rate}, {"steps", p.anneal.steps}}},
          {"plan_aspect", p.plan_aspect}};
}

int cmd_floorplan(const Globals& g, const FloorplanArgs& a) {
  RunConfig cfg = resolve_config(g);
  cfg.validate();
  if (a.prompt.empty()) throw ConfigError("--prompt is required");
  std::unique_ptr<LlmClient> client;
  std::string model = "mock";
  if (a.mock) {
    client = std::make_unique<MockLlmClient>();
  } else {
    HttpLlmConfig http = HttpLlmConfig::from_env();
    model = http.model;
    client = std::make_unique<HttpLlmClient>(std::move(http));
  }
  std::vector<std::string> warnings;
  const FloorplanParams params = params_from_prompt(a.prompt, *client, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}", w);
  const std::string id = a.id.empty() ? "plan-" + std::to_string(cfg.seed) : a.id;
  const GeneratedFloorplan gen = generate_floorplan(params, substream_seed("anneal", cfg.seed), id);

  const std::string hash =
      run_hash("floorplan", cfg, {{"prompt", a.prompt}, {"model", model}, {"id", id}}, {});
  json j = to_json(gen.plan);
  j["graph"] = to_json(gen.graph);
  j["energy"] = gen.energy;
  j["params"] = params_to_json(params);
  j["warnings"] = warnings;
  j["prompt"] = a.prompt;
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  const fs::path out = cfg.paths.out.empty() ? fs::path("floorplan.json") : fs::path(cfg.paths.out);
  write_json_file(out, j);
  spdlog::info("wrote {} ({} rooms, energy {:.4f})", out.string(), gen.plan.rooms.size(), gen.energy);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// export-svg

int cmd_export_svg(const Globals& g, const SvgArgs& a) {
  RunConfig cfg = resolve_config(g);
  cfg.validate();
  if (a.scene.empty()) throw ConfigError("--scene is required");
  const SceneLayout scene = scene_from_json(read_json_file(a.scene));
  const auto plans = resolve_plans(cfg);
  auto it = plans.find(scene.floorplan_id);
  if (it == plans.end()) {
    if (plans.size() != 1) throw ConfigError("no floor plan with id '" + scene.floorplan_id + "'");
    it = plans.begin();
  }
  const AssetCatalog cat = resolve_catalog(cfg);
  const std::string hash = run_hash("export-svg", cfg, {{"walkable", a.walkable}},
                                    {{"scene", a.scene}, {"catalog", cfg.paths.catalog}, {"plans", cfg.paths.plans}});
  SvgOptions opt;
  opt.walkable = a.walkable;
  opt.raster_cell = cfg.walkable.raster_cell;
  opt.metadata = "config_hash=" + hash + " seed=" + std::to_string(cfg.seed);
  const fs::path out = cfg.paths.out.empty() ? fs::path("scene.svg") : fs::path(cfg.paths.out);
  write_text_file(out, render_svg(scene, it->second, &cat, opt));
  spdlog::info("wrote {}", out.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided diffusion scene generation, post-optimization and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run config JSON (see docs/config.schema.json)");
  app.add_option("--seed", g.seed, "Run seed (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads for batch commands")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory, or output file for floorplan/export-svg");
  app.add_option("--catalog", g.catalog, "Asset catalog JSON (default: built-in toy catalog)");
  app.add_option("--plans", g.plans, "Floor plan JSON file or directory (default: built-in toy room)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the denoiser");
  train->add_option("--corpus", ta.corpus, "synthetic | point-mass | scene directory");
  train->add_option("--epochs", ta.epochs, "Total epoch count");
  train->add_option("--resume", ta.resume, "Checkpoint to continue from");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Generate scenes");
  sample->add_option("--count", sa.count, "Number of scenes");
  sample->add_option("--oracle-mixture", sa.oracle, "Use the closed-form toy denoiser: quantity | articulated");
  sample->add_option("--checkpoint", sa.checkpoint, "Trained denoiser checkpoint");
  sample->add_option("--plan-id", sa.plan_id, "Floor plan to condition on");
  sample->add_option("--lambda", sa.lambda, "Guidance scale");
  sample->add_option("--n-target", sa.n_target, "Quantity guidance target count");
  sample->add_option("--gamma-quantity", sa.gamma_quantity, "Quantity guidance weight");
  sample->add_option("--gamma-articoll", sa.gamma_articoll, "Articulation collision guidance weight");

  OptimizeArgs oa;
  auto* optimize = app.add_subcommand("optimize", "Raise the walkable ratio by size-preserving replacement");
  optimize->add_option("--scenes", oa.scenes, "Scene JSON file or directory")->required();
  optimize->add_option("--tau", oa.tau, "Target walkable ratio");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics over a scene directory");
  evaluate->add_option("--scenes", ea.scenes, "Scene JSON file or directory")->required();
  evaluate->add_option("--reference", ea.reference, "Reference scenes for CKL");
  evaluate->add_option("--gen-graphs", ea.gen_graphs, "Generated room graphs or floor plans");
  evaluate->add_option("--gt-graphs", ea.gt_graphs, "Ground-truth room graphs or floor plans");
  evaluate->add_option("--n-targets", ea.n_targets, "Object counts for SR_quantity")->delimiter(',');

  FloorplanArgs fa;
  auto* floorplan = app.add_subcommand("floorplan", "Generate a floor plan from a prompt");
  floorplan->add_option("--prompt", fa.prompt, "Natural-language description")->required();
  floorplan->add_flag("--mock-llm", fa.mock, "Use the deterministic rule-based client");
  floorplan->add_option("--id", fa.id, "Plan id (default plan-<seed>)");

  SvgArgs va;
  auto* svg = app.add_subcommand("export-svg", "Render a scene top-down as SVG");
  svg->add_option("--scene", va.scene, "Scene JSON")->required();
  svg->add_flag("--walkable", va.walkable, "Shade the walkable raster");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("scenegen");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*train) return cmd_train(g, ta);
    if (*sample) return cmd_sample(g, sa);
    if (*optimize) return cmd_optimize(g, oa);
    if (*evaluate) return cmd_evaluate(g, ea);
    if (*floorplan) return cmd_floorplan(g, fa);
    if (*svg) return cmd_export_svg(g, va);
  } catch (const DomainFailure& e) {
    spdlog::error("{}", e.what);
    return kExitDomain;
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const DimensionMismatch& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const CheckpointError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const SchemaViolation& e) {
    spdlog::error("{}; raw reply: {}", e.what(), e.raw_response());
    return kExitDomain;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
