#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dml/linalg.hpp"

namespace dml {

enum class Activation : std::uint8_t { None = 0, Relu = 1 };

struct Layer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim
  Activation activation = Activation::None;

  bool operator==(const Layer&) const = default;
};

// Feed-forward embedding function: affine/ReLU layers followed by a
// mandatory row-wise L2 normalization.
struct EmbeddingNet {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().weights.cols; }
  std::size_t out_dim() const { return layers.back().weights.rows; }
  std::size_t param_count() const;

  bool operator==(const EmbeddingNet&) const = default;
};

// Default architecture: input_dim -> hidden (ReLU) -> out_dim (linear),
// then normalize. He-initialized weights, zero bias.
EmbeddingNet make_default_net(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t out_dim, std::uint64_t seed);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_activations;   // z per layer
  std::vector<Matrix> activations;       // post-activation per layer
  Matrix pre_norm;                       // final layer output before normalization
  std::vector<double> pre_norm_lengths;  // ||row|| of pre_norm
};

// Embeds a batch; every output row is unit-norm. The cache retains what
// backward needs.
Matrix forward(const EmbeddingNet& net, const Matrix& batch_features,
               ForwardCache& cache);
Matrix forward(const EmbeddingNet& net, const Matrix& batch_features);

struct NetGradients {
  std::vector<Matrix> d_weights;
  std::vector<Vector> d_bias;
};

// Exact backprop through normalization (Jacobian (I - y^y^T)/||y||),
// ReLU (subgradient 0 at 0) and the affine layers.
NetGradients backward(const EmbeddingNet& net, const ForwardCache& cache,
                      const Matrix& d_embeddings);

struct AdamState {
  std::uint64_t t = 0;
  std::vector<double> m;  // first moments, flat over theta then alpha
  std::vector<double> v;  // second moments
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamState&) const = default;
};

// Flat parameter order used by the optimizer and the checkpoint:
// per layer weights then bias, then alphas in ascending class id.
std::vector<double> flatten_params(const EmbeddingNet& net,
                                   const std::map<int, double>& alphas);
void unflatten_params(const std::vector<double>& flat, EmbeddingNet& net,
                      std::map<int, double>& alphas);

// One Adam update with bias correction over a flat parameter vector.
// Entries from alpha_offset on use lr * alpha_lr_mult and are clamped
// to >= 0 afterward.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr, std::size_t alpha_offset,
               double alpha_lr_mult = 1.0);

}  // namespace dml
