#pragma once

// Run configuration shared by the CLI subcommands, plus the reproducibility
// plumbing: canonical config hashing and named RNG sub-streams.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scenegen/denoiser.hpp"
#include "scenegen/diffusion.hpp"
#include "scenegen/error.hpp"
#include "scenegen/guidance.hpp"
#include "scenegen/json_io.hpp"
#include "scenegen/postopt.hpp"
#include "scenegen/report.hpp"

namespace scenegen {

/// Raised for unreadable or inconsistent configuration; maps to exit code 2.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct PathsConfig {
  std::string catalog;
  std::string plans;  // directory or single plan file
  std::string checkpoint;
  std::string out;
};

struct ScheduleConfig {
  int T = 200;
  // Unset: the linear 1e-4..0.02 range rescaled by 1000 / T.
  std::optional<double> beta_start;
  std::optional<double> beta_end;

  NoiseSchedule make() const {
    if (beta_start.has_value() != beta_end.has_value())
      throw ConfigError("schedule.beta_start and schedule.beta_end must be given together");
    return beta_start ? make_schedule(T, *beta_start, *beta_end) : default_schedule(T);
  }
};

struct TrainConfig {
  std::string corpus = "synthetic";  // synthetic | point-mass | <scene directory>
  int corpus_size = 256;
  int n_max = 8;
  int epochs = 20;
  int batch_size = 32;
  int hidden = 128;
  double lr = 2e-4;
  double max_grad_norm = 10.0;
};

struct RunConfig {
  PathsConfig paths;
  ScheduleConfig schedule;
  GuidedSampleConfig guidance;
  WalkableConfig walkable;
  TrainConfig train;
  EvaluationConfig evaluate;
  int latent_dim = 8;
  std::uint64_t seed = 0;
  int workers = 1;

  /// Checks value ranges and that every referenced path exists.
  void validate() const {
    try {
      const NoiseSchedule s = schedule.make();
      guidance.validate(s.T());
      walkable.validate();
      evaluate.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (train.epochs < 0 || train.corpus_size < 1 || train.n_max < 1 || train.hidden < 1)
      throw ConfigError("train block: epochs >= 0, corpus_size, n_max and hidden >= 1");
    if (!(train.lr > 0.0)) throw ConfigError("train.lr must be positive");
    for (const auto& p : {paths.catalog, paths.plans, paths.checkpoint})
      if (!p.empty() && !std::filesystem::exists(p)) throw ConfigError("path does not exist: '" + p + "'");
  }
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + where + "." + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v, where);
  out = v;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json thresholds = {{"min", c.evaluate.min_thresholds}, {"max", c.evaluate.max_thresholds}};
  return {
      {"paths",
       {{"catalog", c.paths.catalog}, {"plans", c.paths.plans}, {"checkpoint", c.paths.checkpoint}, {"out", c.paths.out}}},
      {"schedule",
       {{"T", c.schedule.T},
        {"beta_start", detail::opt_json(c.schedule.beta_start)},
        {"beta_end", detail::opt_json(c.schedule.beta_end)}}},
      {"guidance",
       {{"lambda", c.guidance.lambda},
        {"gamma_quantity", c.guidance.gamma_quantity},
        {"gamma_articoll", c.guidance.gamma_articoll},
        {"quantity_t_max", c.guidance.quantity_t_max},
        {"articoll_t_max", c.guidance.articoll_t_max},
        {"n_target", detail::opt_json(c.guidance.n_target)}}},
      {"walkable",
       {{"tau", c.walkable.tau},
        {"max_iters", c.walkable.max_iters},
        {"top_k", c.walkable.top_k},
        {"raster_cell", c.walkable.raster_cell}}},
      {"train",
       {{"corpus", c.train.corpus},
        {"corpus_size", c.train.corpus_size},
        {"n_max", c.train.n_max},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"hidden", c.train.hidden},
        {"lr", c.train.lr},
        {"max_grad_norm", c.train.max_grad_norm}}},
      {"evaluate",
       {{"n_targets", c.evaluate.n_targets},
        {"taus", c.evaluate.taus},
        {"agent_radius", c.evaluate.agent_radius},
        {"cell", c.evaluate.cell},
        {"thresholds", thresholds}}},
      {"latent_dim", c.latent_dim},
      {"seed", c.seed},
      {"workers", c.workers},
  };
}

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  using detail::read;
  using detail::read_opt;
  detail::reject_unknown(j, {"paths", "schedule", "guidance", "walkable", "train", "evaluate", "latent_dim", "seed",
                             "workers", "$schema"},
                         "config");
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::reject_unknown(p, {"catalog", "plans", "checkpoint", "out"}, "paths");
    read(p, "catalog", c.paths.catalog, "paths");
    read(p, "plans", c.paths.plans, "paths");
    read(p, "checkpoint", c.paths.checkpoint, "paths");
    read(p, "out", c.paths.out, "paths");
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    detail::reject_unknown(s, {"T", "beta_start", "beta_end"}, "schedule");
    read(s, "T", c.schedule.T, "schedule");
    read_opt(s, "beta_start", c.schedule.beta_start, "schedule");
    read_opt(s, "beta_end", c.schedule.beta_end, "schedule");
  }
  if (j.contains("guidance")) {
    const auto& g = j.at("guidance");
    detail::reject_unknown(
        g, {"lambda", "gamma_quantity", "gamma_articoll", "quantity_t_max", "articoll_t_max", "n_target"}, "guidance");
    read(g, "lambda", c.guidance.lambda, "guidance");
    read(g, "gamma_quantity", c.guidance.gamma_quantity, "guidance");
    read(g, "gamma_articoll", c.guidance.gamma_articoll, "guidance");
    read(g, "quantity_t_max", c.guidance.quantity_t_max, "guidance");
    read(g, "articoll_t_max", c.guidance.articoll_t_max, "guidance");
    read_opt(g, "n_target", c.guidance.n_target, "guidance");
  }
  if (j.contains("walkable")) {
    const auto& w = j.at("walkable");
    detail::reject_unknown(w, {"tau", "max_iters", "top_k", "raster_cell"}, "walkable");
    read(w, "tau", c.walkable.tau, "walkable");
    read(w, "max_iters", c.walkable.max_iters, "walkable");
    read(w, "top_k", c.walkable.top_k, "walkable");
    read(w, "raster_cell", c.walkable.raster_cell, "walkable");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(
        t, {"corpus", "corpus_size", "n_max", "epochs", "batch_size", "hidden", "lr", "max_grad_norm"}, "train");
    read(t, "corpus", c.train.corpus, "train");
    read(t, "corpus_size", c.train.corpus_size, "train");
    read(t, "n_max", c.train.n_max, "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "hidden", c.train.hidden, "train");
    read(t, "lr", c.train.lr, "train");
    read(t, "max_grad_norm", c.train.max_grad_norm, "train");
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    detail::reject_unknown(e, {"n_targets", "taus", "agent_radius", "cell", "thresholds"}, "evaluate");
    read(e, "n_targets", c.evaluate.n_targets, "evaluate");
    read(e, "taus", c.evaluate.taus, "evaluate");
    read(e, "agent_radius", c.evaluate.agent_radius, "evaluate");
    read(e, "cell", c.evaluate.cell, "evaluate");
    if (e.contains("thresholds")) {
      const auto& th = e.at("thresholds");
      detail::reject_unknown(th, {"min", "max"}, "evaluate.thresholds");
      read(th, "min", c.evaluate.min_thresholds, "evaluate.thresholds");
      read(th, "max", c.evaluate.max_thresholds, "evaluate.thresholds");
    }
  }
  read(j, "latent_dim", c.latent_dim, "config");
  read(j, "seed", c.seed, "config");
  read(j, "workers", c.workers, "config");
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  apply_json(c, j);
  // Relative paths in a config file are relative to the file itself.
  const std::filesystem::path base = path.parent_path();
  for (std::string* p : {&c.paths.catalog, &c.paths.plans, &c.paths.checkpoint, &c.paths.out})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return c;
}

// ---------------------------------------------------------------------------
// Hashing and sub-streams

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Digest of a file, or of every regular file under a directory (relative
/// paths and contents, in sorted order).
inline std::string content_digest(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  auto file_bytes = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot read '" + p.string() + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
  };
  if (!fs::exists(path)) throw ConfigError("path does not exist: '" + path.string() + "'");
  if (!fs::is_directory(path)) return hex64(fnv1a(file_bytes(path)));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a(std::string("dir"));
  for (const auto& f : files) {
    h = fnv1a(fs::relative(f, path).generic_string() + '\0', h);
    h = fnv1a(file_bytes(f) + '\0', h);
  }
  return hex64(h);
}

/// FNV-1a over canonical JSON (object keys sorted, compact). Callers pass
/// everything that determines the artifacts: command, resolved config,
/// arguments and input digests, but not output locations or worker count.
inline std::string config_hash(const nlohmann::json& canonical) { return hex64(fnv1a(canonical.dump())); }

/// Seed of the `index`-th draw of sub-stream `name` under run seed `seed`.
inline std::uint64_t substream_seed(const std::string& name, std::uint64_t seed, std::uint64_t index = 0) {
  return fnv1a(name + "/" + std::to_string(seed) + "/" + std::to_string(index));
}

inline Rng substream(const std::string& name, std::uint64_t seed, std::uint64_t index = 0) {
  return Rng(substream_seed(name, seed, index));
}

}  // namespace scenegen
