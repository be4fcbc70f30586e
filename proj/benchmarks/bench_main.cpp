#include <benchmark/benchmark.h>

#include "dml/density.hpp"
#include "dml/eval.hpp"
#include "dml/losses.hpp"
#include "dml/model.hpp"
#include "dml/rng.hpp"

using namespace dml;

namespace {

Matrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix e(n, d);
  for (double& x : e.values) x = standard_normal(rng);
  l2_normalize_rows(e);
  return e;
}

std::vector<int> cyclic_labels(std::size_t n, int classes) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % classes;
  return labels;
}

void BM_ContrastiveLoss(benchmark::State& state) {
  const std::size_t n = 100;
  Matrix e = random_embeddings(n, 128, 1);
  auto labels = cyclic_labels(n, 10);
  PairSet pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      (labels[i] == labels[j] ? pairs.positives : pairs.negatives).emplace_back(i, j);
  for (auto _ : state) {
    auto out = contrastive_loss(e, pairs, 1.0);
    benchmark::DoNotOptimize(out.value);
  }
}
BENCHMARK(BM_ContrastiveLoss);

void BM_NpairLoss(benchmark::State& state) {
  const std::size_t n = 100;
  Matrix e = random_embeddings(n, 128, 2);
  auto labels = cyclic_labels(n, 10);
  TupletSet tuplets;
  for (std::size_t a = 0; a < n; ++a) {
    Tuplet t{a, (a + 10) % n, {}};
    for (int c = 0; c < 10; ++c)
      if (c != labels[a]) t.negatives.push_back(static_cast<std::size_t>(c));
    tuplets.tuplets.push_back(std::move(t));
  }
  for (auto _ : state) {
    auto out = npair_loss(e, tuplets);
    benchmark::DoNotOptimize(out.value);
  }
}
BENCHMARK(BM_NpairLoss);

void BM_DensityRegularizer(benchmark::State& state) {
  const std::size_t n = 100;
  Matrix e = random_embeddings(n, 128, 3);
  auto labels = cyclic_labels(n, 10);
  DensityState ds;
  ds.eta = 0.5;
  for (int c = 0; c < 10; ++c) {
    ds.alphas[c] = 0.5;
    ds.d0[c] = 0.4 + 0.05 * c;
  }
  for (auto _ : state) {
    auto out = density_regularizer(e, labels, ds);
    benchmark::DoNotOptimize(out.value);
  }
}
BENCHMARK(BM_DensityRegularizer);

void BM_NetForwardBackward(benchmark::State& state) {
  EmbeddingNet net = make_default_net(32, 256, 128, 4);
  Matrix x(100, 32);
  Rng rng(5);
  for (double& v : x.values) v = standard_normal(rng);
  Matrix d_emb(100, 128);
  for (double& v : d_emb.values) v = 0.01 * standard_normal(rng);
  for (auto _ : state) {
    ForwardCache cache;
    Matrix emb = forward(net, x, cache);
    NetGradients grads = backward(net, cache, d_emb);
    benchmark::DoNotOptimize(grads.d_weights.size());
    benchmark::DoNotOptimize(emb.values.data());
  }
}
BENCHMARK(BM_NetForwardBackward);

void BM_Kmeans(benchmark::State& state) {
  Matrix e = random_embeddings(200, 32, 6);
  for (auto _ : state) {
    auto assign = kmeans(e, 10, 0);
    benchmark::DoNotOptimize(assign.data());
  }
}
BENCHMARK(BM_Kmeans);

}  // namespace

BENCHMARK_MAIN();
