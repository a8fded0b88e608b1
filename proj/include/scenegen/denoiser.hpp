#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"

namespace scenegen {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kTimeEmbedDim = 32;

/// Sinusoidal embedding of the step index.
inline VectorXd time_embedding(int t, int dim = kTimeEmbedDim) {
  VectorXd e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * freq);
    e[half + i] = std::cos(t * freq);
  }
  return e;
}

inline constexpr int kCondDim = 3 + kNumRoomTypes;

/// Floor-plan conditioning: [bbox width/10, bbox depth/10, area/100, room-type counts].
inline VectorXd encode_floorplan(const FloorPlan& plan) {
  VectorXd c = VectorXd::Zero(kCondDim);
  const Rect2 b = plan.bbox();
  c[0] = b.width() / 10.0;
  c[1] = b.depth() / 10.0;
  c[2] = plan.total_area() / 100.0;
  for (const auto& r : plan.rooms) c[3 + static_cast<int>(r.type)] += 1.0;
  return c;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
  return cdf + x * pdf;
}

struct MlpArch {
  int state_dim = 0;
  int hidden = 256;
  int time_dim = kTimeEmbedDim;
  int cond_dim = kCondDim;
  std::string activation = "gelu";

  int input_dim() const { return state_dim + time_dim + cond_dim; }
  // layer l maps dims[l] -> dims[l+1]
  std::array<int, 5> dims() const { return {input_dim(), hidden, hidden, hidden, state_dim}; }
  Eigen::Index param_count() const {
    const auto d = dims();
    Eigen::Index n = 0;
    for (int l = 0; l < 4; ++l) n += static_cast<Eigen::Index>(d[l + 1]) * d[l] + d[l + 1];
    return n;
  }
  bool operator==(const MlpArch&) const = default;
};

/// Parameters of eps_theta: input projection, two hidden layers and an
/// output head, stored in one flat vector (W0 b0 W1 b1 W2 b2 W3 b3, column-major).
struct DenoiserParams {
  MlpArch arch;
  VectorXd data;

  using MatMap = Eigen::Map<MatrixXd>;
  using ConstMatMap = Eigen::Map<const MatrixXd>;
  using VecMap = Eigen::Map<VectorXd>;
  using ConstVecMap = Eigen::Map<const VectorXd>;

  struct Offsets {
    std::array<Eigen::Index, 4> w{};
    std::array<Eigen::Index, 4> b{};
  };

  Offsets offsets() const {
    Offsets o;
    const auto d = arch.dims();
    Eigen::Index p = 0;
    for (int l = 0; l < 4; ++l) {
      o.w[l] = p;
      p += static_cast<Eigen::Index>(d[l + 1]) * d[l];
      o.b[l] = p;
      p += d[l + 1];
    }
    return o;
  }

  static ConstMatMap weight(const VectorXd& v, const MlpArch& a, int l) {
    DenoiserParams tmp{a, {}};
    const auto d = a.dims();
    return ConstMatMap(v.data() + tmp.offsets().w[l], d[l + 1], d[l]);
  }
  static ConstVecMap bias(const VectorXd& v, const MlpArch& a, int l) {
    DenoiserParams tmp{a, {}};
    return ConstVecMap(v.data() + tmp.offsets().b[l], a.dims()[l + 1]);
  }

  bool operator==(const DenoiserParams& o) const {
    return arch == o.arch && data.size() == o.data.size() &&
           std::memcmp(data.data(), o.data.data(), sizeof(double) * data.size()) == 0;
  }
};

/// Per-layer uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline DenoiserParams init_denoiser(const MlpArch& arch, std::uint64_t seed) {
  DenoiserParams p{arch, VectorXd::Zero(arch.param_count())};
  std::mt19937_64 rng(seed);
  const auto d = arch.dims();
  const auto off = p.offsets();
  for (int l = 0; l < 4; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const Eigen::Index nw = static_cast<Eigen::Index>(d[l + 1]) * d[l];
    for (Eigen::Index i = 0; i < nw; ++i) p.data[off.w[l] + i] = u(rng);
    for (Eigen::Index i = 0; i < d[l + 1]; ++i) p.data[off.b[l] + i] = u(rng);
  }
  return p;
}

/// Activations kept for the backward pass (columns are batch samples).
struct ForwardCache {
  MatrixXd input;
  std::array<MatrixXd, 3> pre;   // pre-activations of the three hidden layers
  std::array<MatrixXd, 3> post;  // GELU outputs
  MatrixXd output;
};

inline MatrixXd assemble_input(const MlpArch& arch, const MatrixXd& x_t, const std::vector<int>& t,
                               const MatrixXd& cond) {
  const Eigen::Index B = x_t.cols();
  if (x_t.rows() != arch.state_dim || cond.rows() != arch.cond_dim || cond.cols() != B ||
      static_cast<Eigen::Index>(t.size()) != B)
    throw DimensionMismatch("denoiser input shapes inconsistent");
  MatrixXd in(arch.input_dim(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    in.col(j).head(arch.state_dim) = x_t.col(j);
    in.col(j).segment(arch.state_dim, arch.time_dim) = time_embedding(t[j], arch.time_dim);
    in.col(j).tail(arch.cond_dim) = cond.col(j);
  }
  return in;
}

inline MatrixXd forward_batch(const DenoiserParams& p, const MatrixXd& x_t, const std::vector<int>& t,
                              const MatrixXd& cond, ForwardCache* cache = nullptr) {
  if (p.data.size() != p.arch.param_count()) throw DimensionMismatch("parameter vector size mismatch");
  MatrixXd h = assemble_input(p.arch, x_t, t, cond);
  if (cache) cache->input = h;
  for (int l = 0; l < 3; ++l) {
    MatrixXd z = DenoiserParams::weight(p.data, p.arch, l) * h;
    z.colwise() += DenoiserParams::bias(p.data, p.arch, l);
    h = z.unaryExpr([](double v) { return gelu(v); });
    if (cache) {
      cache->pre[l] = std::move(z);
      cache->post[l] = h;
    }
  }
  MatrixXd out = DenoiserParams::weight(p.data, p.arch, 3) * h;
  out.colwise() += DenoiserParams::bias(p.data, p.arch, 3);
  if (cache) cache->output = out;
  return out;
}

/// eps_hat(x_t, t, F) for a single state.
inline VectorXd forward(const DenoiserParams& p, const VectorXd& x_t, int t, const VectorXd& cond) {
  return forward_batch(p, x_t, {t}, cond).col(0);
}

/// Reverse-mode gradient of sum(upstream .* output) w.r.t. every parameter.
inline VectorXd backward_batch(const DenoiserParams& p, const ForwardCache& cache, const MatrixXd& upstream) {
  if (upstream.rows() != p.arch.state_dim || upstream.cols() != cache.output.cols())
    throw DimensionMismatch("upstream gradient shape mismatch");
  VectorXd grad = VectorXd::Zero(p.data.size());
  const auto off = p.offsets();
  const auto d = p.arch.dims();
  MatrixXd delta = upstream;
  for (int l = 3; l >= 0; --l) {
    const MatrixXd& in = l == 0 ? cache.input : cache.post[l - 1];
    Eigen::Map<MatrixXd>(grad.data() + off.w[l], d[l + 1], d[l]).noalias() = delta * in.transpose();
    Eigen::Map<VectorXd>(grad.data() + off.b[l], d[l + 1]) = delta.rowwise().sum();
    if (l == 0) break;
    MatrixXd back = DenoiserParams::weight(p.data, p.arch, l).transpose() * delta;
    const MatrixXd& z = cache.pre[l - 1];
    delta = back.cwiseProduct(z.unaryExpr([](double v) { return gelu_grad(v); }));
  }
  return grad;
}

inline VectorXd backward(const DenoiserParams& p, const VectorXd& x_t, int t, const VectorXd& cond,
                         const VectorXd& upstream) {
  ForwardCache cache;
  forward_batch(p, x_t, {t}, cond, &cache);
  return backward_batch(p, cache, upstream);
}

// ---------------------------------------------------------------------------
// Checkpoint container
//
//   "SGCK" | u32 version | u64 header_len | header JSON | u64 n | n f64 params
//   | u8 has_optimizer [u64 step | n f64 m | n f64 v] | u64 fnv1a of all prior bytes

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct AdamState {
  std::uint64_t step = 0;
  VectorXd m;
  VectorXd v;
};

struct Checkpoint {
  DenoiserParams params;
  nlohmann::json meta = nlohmann::json::object();  // schedule, seeds, config hash, epoch
  std::optional<AdamState> optimizer;
};

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void pod(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void vec(const VectorXd& v) { bytes(v.data(), sizeof(double) * v.size()); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& s) : s_(s) {}
  template <class T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* out, std::size_t n) {
    if (pos_ + n > s_.size()) throw CheckpointError(CheckpointError::Kind::kCorrupt, "checkpoint truncated");
    std::memcpy(out, s_.data() + pos_, n);
    pos_ += n;
  }
  VectorXd vec(std::uint64_t n) {
    if (n > (s_.size() - pos_) / sizeof(double))
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "checkpoint truncated");
    VectorXd v(static_cast<Eigen::Index>(n));
    take(v.data(), sizeof(double) * n);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline nlohmann::json arch_to_json(const MlpArch& a) {
  return {{"state_dim", a.state_dim}, {"hidden", a.hidden},         {"time_dim", a.time_dim},
          {"cond_dim", a.cond_dim},   {"activation", a.activation}};
}

inline MlpArch arch_from_json(const nlohmann::json& j) {
  MlpArch a;
  a.state_dim = j.at("state_dim").get<int>();
  a.hidden = j.at("hidden").get<int>();
  a.time_dim = j.at("time_dim").get<int>();
  a.cond_dim = j.at("cond_dim").get<int>();
  a.activation = j.at("activation").get<std::string>();
  if (a.activation != "gelu") throw CheckpointError(CheckpointError::Kind::kShape, "unsupported activation");
  return a;
}

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes("SGCK", 4);
  w.pod(kCheckpointVersion);
  nlohmann::json header = {{"arch", arch_to_json(ck.params.arch)}, {"meta", ck.meta}};
  const std::string hs = header.dump();
  w.pod(static_cast<std::uint64_t>(hs.size()));
  w.bytes(hs.data(), hs.size());
  w.pod(static_cast<std::uint64_t>(ck.params.data.size()));
  w.vec(ck.params.data);
  w.pod(static_cast<std::uint8_t>(ck.optimizer ? 1 : 0));
  if (ck.optimizer) {
    w.pod(ck.optimizer->step);
    w.vec(ck.optimizer->m);
    w.vec(ck.optimizer->v);
  }
  std::string out = w.str();
  const std::uint64_t sum = fnv1a(out.data(), out.size());
  out.append(reinterpret_cast<const char*>(&sum), sizeof(sum));
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  using K = CheckpointError::Kind;
  detail::ByteReader r(bytes);
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, "SGCK", 4) != 0) throw CheckpointError(K::kCorrupt, "not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError(K::kVersion, "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                           std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < sizeof(std::uint64_t)) throw CheckpointError(K::kCorrupt, "checkpoint truncated");
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + bytes.size() - sizeof(stored_sum), sizeof(stored_sum));
  if (fnv1a(bytes.data(), bytes.size() - sizeof(stored_sum)) != stored_sum)
    throw CheckpointError(K::kCorrupt, "checkpoint checksum mismatch (truncated or corrupt)");

  const auto hlen = r.pod<std::uint64_t>();
  if (hlen > bytes.size()) throw CheckpointError(K::kCorrupt, "checkpoint truncated");
  std::string hs(hlen, '\0');
  r.take(hs.data(), hlen);
  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(hs);
    ck.params.arch = arch_from_json(header.at("arch"));
    ck.meta = header.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(K::kCorrupt, std::string("bad checkpoint header: ") + e.what());
  }
  const auto n = r.pod<std::uint64_t>();
  if (static_cast<Eigen::Index>(n) != ck.params.arch.param_count())
    throw CheckpointError(K::kShape, "parameter count does not match architecture");
  ck.params.data = r.vec(n);
  if (r.pod<std::uint8_t>()) {
    AdamState s;
    s.step = r.pod<std::uint64_t>();
    s.m = r.vec(n);
    s.v = r.vec(n);
    ck.optimizer = std::move(s);
  }
  if (r.pos() + sizeof(std::uint64_t) != r.size()) throw CheckpointError(K::kCorrupt, "trailing bytes in checkpoint");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open '" + path + "' for writing");
  const std::string bytes = serialize_checkpoint(ck);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

inline void save(const DenoiserParams& p, const std::string& path) { save_checkpoint({p, {}, std::nullopt}, path); }
inline DenoiserParams load(const std::string& path) { return load_checkpoint(path).params; }

}  // namespace scenegen
