#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bge/errors.hpp"
#include "bge/graph_data.hpp"
#include "bge/rng.hpp"

namespace bge {

enum class EncoderKind { linear, mlp1 };

inline std::string to_string(EncoderKind k) {
  return k == EncoderKind::linear ? "linear" : "mlp1";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "linear") return EncoderKind::linear;
  if (s == "mlp1") return EncoderKind::mlp1;
  throw ValidationError("unknown encoder kind '" + s + "'");
}

// Architecture of one view's encoder. hidden_dim is ignored for linear.
struct EncoderSpec {
  EncoderKind kind = EncoderKind::linear;
  int in_dim = 0;
  int hidden_dim = 0;
};

// All trainable parameters as one flat vector theta, with per-view encoder
// blocks followed by the offset block gamma^{(d,e)} for view pairs d <= e.
//
// Block layouts (column-major matrices):
//   linear: W (K x in)
//   mlp1:   W1 (H x in), b1 (H), W2 (K x H), b2 (K)
// The encoder maps x to W x, resp. W2 tanh(W1 x + b1) + b2.
class ModelParams {
 public:
  ModelParams(std::vector<EncoderSpec> specs, int embed_dim)
      : specs_(std::move(specs)), embed_dim_(embed_dim) {
    if (embed_dim_ < 1) throw ValidationError("ModelParams: embed_dim < 1");
    if (specs_.empty()) throw ValidationError("ModelParams: no views");
    int off = 0;
    for (const auto& s : specs_) {
      if (s.in_dim < 1) throw ValidationError("ModelParams: in_dim < 1");
      if (s.kind == EncoderKind::mlp1 && s.hidden_dim < 1)
        throw ValidationError("ModelParams: mlp1 needs hidden_dim >= 1");
      view_offsets_.push_back(off);
      off += block_size(s);
    }
    psi_size_ = off;
    int v = num_views();
    theta = Eigen::VectorXd::Zero(psi_size_ + v * (v + 1) / 2);
  }

  int embed_dim() const { return embed_dim_; }
  int num_views() const { return static_cast<int>(specs_.size()); }
  const EncoderSpec& spec(int d) const {
    return specs_[static_cast<std::size_t>(d)];
  }
  int size() const { return static_cast<int>(theta.size()); }
  int psi_size() const { return psi_size_; }
  int view_offset(int d) const {
    return view_offsets_[static_cast<std::size_t>(d)];
  }
  int view_size(int d) const { return block_size(spec(d)); }

  // Index into theta of gamma^{(d,e)}; order of (d,e) is irrelevant.
  int gamma_index(int d, int e) const {
    int v = num_views();
    if (d < 0 || e < 0 || d >= v || e >= v)
      throw ValidationError("gamma_index: view out of range");
    if (d > e) std::swap(d, e);
    return psi_size_ + d * v - d * (d - 1) / 2 + (e - d);
  }

  double gamma(int d, int e) const { return theta[gamma_index(d, e)]; }
  void set_gamma(int d, int e, double g) { theta[gamma_index(d, e)] = g; }

  Eigen::VectorXd theta;

 private:
  int block_size(const EncoderSpec& s) const {
    if (s.kind == EncoderKind::linear) return embed_dim_ * s.in_dim;
    return s.hidden_dim * s.in_dim + s.hidden_dim +
           embed_dim_ * s.hidden_dim + embed_dim_;
  }

  std::vector<EncoderSpec> specs_;
  int embed_dim_;
  std::vector<int> view_offsets_;
  int psi_size_ = 0;
};

// Glorot-uniform weights drawn in block order (views in order, matrices in
// layout order, entries column-major); biases and offsets start at zero.
inline void random_init(ModelParams& p, RngStream& rng) {
  auto fill = [&](int off, int rows, int cols, int fan_in, int fan_out) {
    double b = std::sqrt(6.0 / (fan_in + fan_out));
    for (int k = 0; k < rows * cols; ++k) p.theta[off + k] = rng.uniform(-b, b);
    return off + rows * cols;
  };
  for (int d = 0; d < p.num_views(); ++d) {
    const auto& s = p.spec(d);
    int off = p.view_offset(d);
    int K = p.embed_dim();
    if (s.kind == EncoderKind::linear) {
      fill(off, K, s.in_dim, s.in_dim, K);
    } else {
      int H = s.hidden_dim;
      off = fill(off, H, s.in_dim, s.in_dim, H);
      for (int k = 0; k < H; ++k) p.theta[off + k] = 0.0;
      off += H;
      off = fill(off, K, H, H, K);
      for (int k = 0; k < K; ++k) p.theta[off + k] = 0.0;
    }
  }
  for (int k = p.psi_size(); k < p.size(); ++k) p.theta[k] = 0.0;
}

namespace detail {

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;

struct Mlp1Blocks {
  ConstMat w1;
  ConstMat w2;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::VectorXd> b2;
};

inline Mlp1Blocks mlp1_blocks(const ModelParams& p, int d) {
  const auto& s = p.spec(d);
  int H = s.hidden_dim, in = s.in_dim, K = p.embed_dim();
  const double* base = p.theta.data() + p.view_offset(d);
  return Mlp1Blocks{ConstMat(base, H, in),
                    ConstMat(base + H * in + H, K, H),
                    Eigen::Map<const Eigen::VectorXd>(base + H * in, H),
                    Eigen::Map<const Eigen::VectorXd>(base + H * in + H + K * H, K)};
}

}  // namespace detail

// Forward pass of view d's encoder; writes the post-activation hidden layer
// into *hidden when requested (left empty for linear encoders).
inline Eigen::VectorXd encode(const ModelParams& p, int d,
                              const Eigen::VectorXd& x,
                              Eigen::VectorXd* hidden = nullptr) {
  const auto& s = p.spec(d);
  if (x.size() != s.in_dim)
    throw ValidationError("encode: input dim " + std::to_string(x.size()) +
                          " != view dim " + std::to_string(s.in_dim));
  if (s.kind == EncoderKind::linear) {
    if (hidden) hidden->resize(0);
    return detail::ConstMat(p.theta.data() + p.view_offset(d), p.embed_dim(),
                            s.in_dim) *
           x;
  }
  auto b = detail::mlp1_blocks(p, d);
  Eigen::VectorXd h = (b.w1 * x + b.b1).array().tanh().matrix();
  if (hidden) *hidden = h;
  return b.w2 * h + b.b2;
}

// Encodings of every node, with hidden layers kept for gradient reuse.
struct EncodeCache {
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> hidden;
};

inline EncodeCache encode_all(const ModelParams& p, const Dataset& data) {
  EncodeCache c;
  c.y.resize(static_cast<std::size_t>(data.n()));
  c.hidden.resize(static_cast<std::size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i)
    c.y[static_cast<std::size_t>(i)] =
        encode(p, data.view_of(i), data.feature(i),
               &c.hidden[static_cast<std::size_t>(i)]);
  return c;
}

// log mu for a pair given its encodings: <y_i, y_j> - gamma^{(d_i, d_j)}.
inline double log_mu_from(const ModelParams& p, const Eigen::VectorXd& yi,
                          const Eigen::VectorXd& yj, int di, int dj) {
  return yi.dot(yj) - p.gamma(di, dj);
}

// Similarity rate mu_theta(x_i, x_j) = exp(<f(x_i), f(x_j)> - gamma).
// Throws NumericError when the result is not finite.
inline double mu(const ModelParams& p, const Dataset& data, int i, int j) {
  double s = log_mu_from(p, encode(p, data.view_of(i), data.feature(i)),
                         encode(p, data.view_of(j), data.feature(j)),
                         data.view_of(i), data.view_of(j));
  double m = std::exp(s);
  if (!std::isfinite(m))
    throw NumericError("mu overflow: log mu = " + std::to_string(s) +
                           " for pair (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")",
                       s, i, j);
  return m;
}

namespace detail {

// Accumulates coeff * (d s / d psi_block(view of node)) into grad, where
// s = <y_i, y_j> and other = the partner's encoding.
inline void add_encoder_grad(const ModelParams& p, const Dataset& data,
                             int node, const Eigen::VectorXd& other,
                             const Eigen::VectorXd& hidden, double coeff,
                             Eigen::VectorXd& grad) {
  int d = data.view_of(node);
  const auto& s = p.spec(d);
  const Eigen::VectorXd& x = data.feature(node);
  double* base = grad.data() + p.view_offset(d);
  int K = p.embed_dim();
  if (s.kind == EncoderKind::linear) {
    Eigen::Map<Eigen::MatrixXd>(base, K, s.in_dim).noalias() +=
        coeff * other * x.transpose();
    return;
  }
  int H = s.hidden_dim;
  auto b = mlp1_blocks(p, d);
  Eigen::VectorXd v =
      (b.w2.transpose() * other).cwiseProduct(
          (1.0 - hidden.array().square()).matrix());
  Eigen::Map<Eigen::MatrixXd>(base, H, s.in_dim).noalias() +=
      coeff * v * x.transpose();
  Eigen::Map<Eigen::VectorXd>(base + H * s.in_dim, H) += coeff * v;
  Eigen::Map<Eigen::MatrixXd>(base + H * s.in_dim + H, K, H).noalias() +=
      coeff * other * hidden.transpose();
  Eigen::Map<Eigen::VectorXd>(base + H * s.in_dim + H + K * H, K) +=
      coeff * other;
}

}  // namespace detail

// Accumulates a multiple of d(log mu)/d(theta) for pair (i, j) into grad.
// The encoder part is scaled by psi_coeff and the offset coordinate (whose
// own derivative is -1) by gamma_coeff; loss code passes different values
// only when a clamped pair must not push the encoder.
inline void add_logmu_grad(const ModelParams& p, const Dataset& data,
                           const EncodeCache& cache, int i, int j,
                           double psi_coeff, double gamma_coeff,
                           Eigen::VectorXd& grad) {
  const auto& yi = cache.y[static_cast<std::size_t>(i)];
  const auto& yj = cache.y[static_cast<std::size_t>(j)];
  if (psi_coeff != 0.0) {
    detail::add_encoder_grad(p, data, i, yj,
                             cache.hidden[static_cast<std::size_t>(i)],
                             psi_coeff, grad);
    detail::add_encoder_grad(p, data, j, yi,
                             cache.hidden[static_cast<std::size_t>(j)],
                             psi_coeff, grad);
  }
  grad[p.gamma_index(data.view_of(i), data.view_of(j))] -= gamma_coeff;
}

struct MuGrad {
  double mu = 0.0;
  Eigen::VectorXd logmu_grad;
};

// mu and the full gradient of log mu in one call. Point-query convenience;
// batch loss code uses encode_all + add_logmu_grad instead.
inline MuGrad mu_and_logmu_grad(const ModelParams& p, const Dataset& data,
                                int i, int j) {
  EncodeCache c;
  c.y.resize(static_cast<std::size_t>(data.n()));
  c.hidden.resize(static_cast<std::size_t>(data.n()));
  c.y[static_cast<std::size_t>(i)] =
      encode(p, data.view_of(i), data.feature(i),
             &c.hidden[static_cast<std::size_t>(i)]);
  c.y[static_cast<std::size_t>(j)] =
      encode(p, data.view_of(j), data.feature(j),
             &c.hidden[static_cast<std::size_t>(j)]);
  MuGrad out;
  double s = log_mu_from(p, c.y[static_cast<std::size_t>(i)],
                         c.y[static_cast<std::size_t>(j)], data.view_of(i),
                         data.view_of(j));
  out.mu = std::exp(s);
  if (!std::isfinite(out.mu))
    throw NumericError("mu overflow: log mu = " + std::to_string(s) +
                           " for pair (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")",
                       s, i, j);
  out.logmu_grad = Eigen::VectorXd::Zero(p.size());
  add_logmu_grad(p, data, c, i, j, 1.0, 1.0, out.logmu_grad);
  return out;
}

}  // namespace bge
