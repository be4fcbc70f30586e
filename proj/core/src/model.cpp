#include "dml/model.hpp"

#include <cmath>

#include "dml/errors.hpp"
#include "dml/rng.hpp"

namespace dml {

std::size_t EmbeddingNet::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weights.values.size() + l.bias.size();
  return n;
}

EmbeddingNet make_default_net(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t out_dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingNet net;
  auto make_layer = [&](std::size_t in, std::size_t out, Activation act) {
    Layer l;
    l.weights = Matrix(out, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : l.weights.values) w = scale * standard_normal(rng);
    l.bias = Vector(out, 0.0);
    l.activation = act;
    return l;
  };
  net.layers.push_back(make_layer(input_dim, hidden_dim, Activation::Relu));
  net.layers.push_back(make_layer(hidden_dim, out_dim, Activation::None));
  return net;
}

namespace {

Matrix affine_forward(const Layer& l, const Matrix& x) {
  if (x.cols != l.weights.cols)
    throw DimMismatch("layer expects input dim " + std::to_string(l.weights.cols) +
                      ", got " + std::to_string(x.cols));
  Matrix z(x.rows, l.weights.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto xr = x.row(r);
    auto zr = z.row(r);
    for (std::size_t o = 0; o < l.weights.rows; ++o)
      zr[o] = l.bias[o] + dot(l.weights.row(o), xr);
  }
  return z;
}

}  // namespace

Matrix forward(const EmbeddingNet& net, const Matrix& batch_features,
               ForwardCache& cache) {
  cache.input = batch_features;
  cache.pre_activations.clear();
  cache.activations.clear();
  const Matrix* cur = &cache.input;
  for (const Layer& l : net.layers) {
    Matrix z = affine_forward(l, *cur);
    cache.pre_activations.push_back(z);
    if (l.activation == Activation::Relu)
      for (double& x : z.values) x = std::max(0.0, x);
    cache.activations.push_back(std::move(z));
    cur = &cache.activations.back();
  }
  cache.pre_norm = *cur;
  cache.pre_norm_lengths.resize(cache.pre_norm.rows);
  Matrix out = cache.pre_norm;
  for (std::size_t r = 0; r < out.rows; ++r) {
    const double n = norm2(out.row(r));
    if (n <= kNormEpsilon) throw NormTooSmall(n);
    cache.pre_norm_lengths[r] = n;
    for (double& x : out.row(r)) x /= n;
  }
  return out;
}

Matrix forward(const EmbeddingNet& net, const Matrix& batch_features) {
  ForwardCache cache;
  return forward(net, batch_features, cache);
}

NetGradients backward(const EmbeddingNet& net, const ForwardCache& cache,
                      const Matrix& d_embeddings) {
  if (cache.activations.size() != net.layers.size() ||
      d_embeddings.rows != cache.pre_norm.rows ||
      d_embeddings.cols != cache.pre_norm.cols)
    throw CacheMismatch("backward: cache does not match net/gradient shapes");

  // Through normalization: dy = (dyhat - yhat (yhat . dyhat)) / ||y||.
  Matrix d(cache.pre_norm.rows, cache.pre_norm.cols);
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double len = cache.pre_norm_lengths[r];
    auto y = cache.pre_norm.row(r);
    auto g = d_embeddings.row(r);
    double radial = 0.0;
    for (std::size_t k = 0; k < d.cols; ++k) radial += (y[k] / len) * g[k];
    auto dr = d.row(r);
    for (std::size_t k = 0; k < d.cols; ++k)
      dr[k] = (g[k] - (y[k] / len) * radial) / len;
  }

  NetGradients grads;
  grads.d_weights.resize(net.layers.size());
  grads.d_bias.resize(net.layers.size());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    if (l.activation == Activation::Relu) {
      const Matrix& z = cache.pre_activations[li];
      for (std::size_t i = 0; i < d.values.size(); ++i)
        if (z.values[i] <= 0.0) d.values[i] = 0.0;
    }
    const Matrix& x = li == 0 ? cache.input : cache.activations[li - 1];
    Matrix& dw = grads.d_weights[li];
    dw = Matrix(l.weights.rows, l.weights.cols);
    Vector& db = grads.d_bias[li];
    db.assign(l.bias.size(), 0.0);
    for (std::size_t r = 0; r < x.rows; ++r) {
      auto xr = x.row(r);
      auto dr = d.row(r);
      for (std::size_t o = 0; o < l.weights.rows; ++o) {
        db[o] += dr[o];
        auto dwo = dw.row(o);
        for (std::size_t i = 0; i < l.weights.cols; ++i) dwo[i] += dr[o] * xr[i];
      }
    }
    if (li > 0) {
      Matrix dx(x.rows, l.weights.cols);
      for (std::size_t r = 0; r < x.rows; ++r) {
        auto dr = d.row(r);
        auto dxr = dx.row(r);
        for (std::size_t o = 0; o < l.weights.rows; ++o) {
          auto wo = l.weights.row(o);
          for (std::size_t i = 0; i < l.weights.cols; ++i) dxr[i] += dr[o] * wo[i];
        }
      }
      d = std::move(dx);
    }
  }
  return grads;
}

std::vector<double> flatten_params(const EmbeddingNet& net,
                                   const std::map<int, double>& alphas) {
  std::vector<double> flat;
  flat.reserve(net.param_count() + alphas.size());
  for (const Layer& l : net.layers) {
    flat.insert(flat.end(), l.weights.values.begin(), l.weights.values.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  for (const auto& [cls, a] : alphas) flat.push_back(a);
  return flat;
}

void unflatten_params(const std::vector<double>& flat, EmbeddingNet& net,
                      std::map<int, double>& alphas) {
  std::size_t off = 0;
  for (Layer& l : net.layers) {
    std::copy_n(flat.begin() + off, l.weights.values.size(), l.weights.values.begin());
    off += l.weights.values.size();
    std::copy_n(flat.begin() + off, l.bias.size(), l.bias.begin());
    off += l.bias.size();
  }
  for (auto& [cls, a] : alphas) a = flat[off++];
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr, std::size_t alpha_offset,
               double alpha_lr_mult) {
  if (params.size() != grads.size())
    throw DimMismatch("adam_step: parameter/gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    const double step_lr = i >= alpha_offset ? lr * alpha_lr_mult : lr;
    params[i] -= step_lr * mhat / (std::sqrt(vhat) + state.epsilon);
    if (i >= alpha_offset && params[i] < 0.0) params[i] = 0.0;
  }
}

}  // namespace dml
