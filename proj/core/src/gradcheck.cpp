#include "dml/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dml/density.hpp"
#include "dml/errors.hpp"
#include "dml/losses.hpp"
#include "dml/model.hpp"
#include "dml/rng.hpp"

namespace dml {

namespace {

struct Instance {
  Matrix embeddings;        // unit-norm rows
  std::vector<int> labels;
  PairSet pairs;
  TripletSet triplets;
  TupletSet tuplets;
};

Instance make_instance(Rng& rng, std::size_t batch, std::size_t dim,
                       std::size_t num_classes) {
  Instance inst;
  inst.embeddings = Matrix(batch, dim);
  for (double& x : inst.embeddings.values) x = standard_normal(rng);
  l2_normalize_rows(inst.embeddings);
  for (std::size_t i = 0; i < batch; ++i)
    inst.labels.push_back(static_cast<int>(i % num_classes));

  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = i + 1; j < batch; ++j)
      (inst.labels[i] == inst.labels[j] ? inst.pairs.positives : inst.pairs.negatives)
          .emplace_back(i, j);
  for (std::size_t a = 0; a < batch; ++a) {
    std::size_t pos = a;
    while (pos == a || inst.labels[pos] != inst.labels[a])
      pos = uniform_index(rng, batch);
    std::size_t neg = a;
    while (inst.labels[neg] == inst.labels[a]) neg = uniform_index(rng, batch);
    inst.triplets.triplets.push_back({a, pos, neg});

    Tuplet t;
    t.anchor = a;
    t.positive = pos;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (static_cast<int>(c) == inst.labels[a]) continue;
      std::size_t n = 0;
      do {
        n = uniform_index(rng, batch);
      } while (inst.labels[n] != static_cast<int>(c));
      t.negatives.push_back(n);
    }
    inst.tuplets.tuplets.push_back(std::move(t));
  }
  return inst;
}

// Central finite differences over a flat parameter vector.
GradCheckResult check(const std::string& component, std::vector<double> params,
                      std::vector<double> analytic,
                      const std::function<double(const std::vector<double>&)>& f,
                      const GradCheckOptions& opt) {
  if (!analytic.empty()) analytic[0] += opt.perturbation;
  GradCheckResult res;
  res.component = component;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (std::abs(analytic[i]) <= opt.magnitude_floor) continue;
    const double saved = params[i];
    params[i] = saved + opt.fd_step;
    const double fp = f(params);
    params[i] = saved - opt.fd_step;
    const double fm = f(params);
    params[i] = saved;
    const double fd = (fp - fm) / (2.0 * opt.fd_step);
    const double rel =
        std::abs(analytic[i] - fd) / std::max(std::abs(analytic[i]), std::abs(fd));
    res.max_rel_error = std::max(res.max_rel_error, rel);
  }
  res.passed = res.max_rel_error < opt.tolerance;
  return res;
}

DensityState make_density_state(Rng& rng, std::size_t num_classes) {
  DensityState state;
  state.eta = 0.5;
  state.lambda = 10.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    state.alphas[static_cast<int>(c)] = 0.3 + 0.5 * uniform_unit(rng);
    state.d0[static_cast<int>(c)] = 0.5 + 1.5 * uniform_unit(rng);
  }
  return state;
}

std::vector<double> alpha_grad_flat(const std::map<int, double>& d_alpha) {
  std::vector<double> flat;
  for (const auto& [cls, g] : d_alpha) flat.push_back(g);
  return flat;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& opt) {
  auto wanted = [&](const std::string& name) {
    return opt.components.empty() ||
           std::find(opt.components.begin(), opt.components.end(), name) !=
               opt.components.end();
  };

  std::vector<GradCheckResult> results;
  Rng rng(opt.seed + 1);

  if (wanted("contrastive")) {
    Instance inst = make_instance(rng, 12, 8, 4);
    auto g = contrastive_loss(inst.embeddings, inst.pairs, 1.0);
    results.push_back(check(
        "contrastive", inst.embeddings.values, g.d_embeddings.values,
        [&](const std::vector<double>& p) {
          Matrix e = inst.embeddings;
          e.values = p;
          return contrastive_loss(e, inst.pairs, 1.0).value;
        },
        opt));
  }
  if (wanted("triplet")) {
    Instance inst = make_instance(rng, 16, 8, 4);
    auto g = triplet_loss(inst.embeddings, inst.triplets, 1.0);
    results.push_back(check(
        "triplet", inst.embeddings.values, g.d_embeddings.values,
        [&](const std::vector<double>& p) {
          Matrix e = inst.embeddings;
          e.values = p;
          return triplet_loss(e, inst.triplets, 1.0).value;
        },
        opt));
  }
  if (wanted("npair")) {
    Instance inst = make_instance(rng, 12, 8, 4);
    auto g = npair_loss(inst.embeddings, inst.tuplets);
    results.push_back(check(
        "npair", inst.embeddings.values, g.d_embeddings.values,
        [&](const std::vector<double>& p) {
          Matrix e = inst.embeddings;
          e.values = p;
          return npair_loss(e, inst.tuplets).value;
        },
        opt));
  }
  if (wanted("density")) {
    // 4 classes x 5 samples, d = 8.
    Instance inst = make_instance(rng, 20, 8, 4);
    DensityState state = make_density_state(rng, 4);
    auto reg = density_regularizer(inst.embeddings, inst.labels, state);
    results.push_back(check(
        "density/embeddings", inst.embeddings.values, reg.d_embeddings.values,
        [&](const std::vector<double>& p) {
          Matrix e = inst.embeddings;
          e.values = p;
          return density_regularizer(e, inst.labels, state).value;
        },
        opt));
    std::vector<double> alphas;
    for (const auto& [cls, a] : state.alphas) alphas.push_back(a);
    results.push_back(check(
        "density/alpha", alphas, alpha_grad_flat(reg.d_alpha),
        [&](const std::vector<double>& p) {
          DensityState s = state;
          std::size_t i = 0;
          for (auto& [cls, a] : s.alphas) a = p[i++];
          return density_regularizer(inst.embeddings, inst.labels, s).value;
        },
        opt));
  }
  if (wanted("network")) {
    EmbeddingNet net = make_default_net(8, 16, 8, rng());
    Matrix features(12, 8);
    for (double& x : features.values) x = standard_normal(rng);
    Matrix direction(12, 8);  // fixed linear functional over embeddings
    for (double& x : direction.values) x = standard_normal(rng);

    ForwardCache cache;
    forward(net, features, cache);
    NetGradients grads = backward(net, cache, direction);
    std::map<int, double> no_alphas;
    std::vector<double> params = flatten_params(net, no_alphas);
    std::vector<double> analytic;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      analytic.insert(analytic.end(), grads.d_weights[li].values.begin(),
                      grads.d_weights[li].values.end());
      analytic.insert(analytic.end(), grads.d_bias[li].begin(), grads.d_bias[li].end());
    }
    results.push_back(check(
        "network", params, analytic,
        [&](const std::vector<double>& p) {
          EmbeddingNet n = net;
          std::map<int, double> none;
          unflatten_params(p, n, none);
          Matrix emb = forward(n, features);
          double v = 0.0;
          for (std::size_t i = 0; i < emb.values.size(); ++i)
            v += direction.values[i] * emb.values[i];
          return v;
        },
        opt));
  }

  // End-to-end objective through the network, per loss, lambda = 10.
  const char* joint_names[] = {"joint/contrastive", "joint/triplet", "joint/npair"};
  for (int which = 0; which < 3; ++which) {
    if (!wanted("joint") && !wanted(joint_names[which])) continue;
    Rng inst_rng(opt.seed + 100 + static_cast<std::uint64_t>(which));
    Instance inst = make_instance(inst_rng, 16, 8, 4);
    EmbeddingNet net = make_default_net(8, 16, 8, inst_rng());
    Matrix features(16, 8);
    for (double& x : features.values) x = standard_normal(inst_rng);
    DensityState state = make_density_state(inst_rng, 4);
    const double lambda = 10.0;

    auto objective = [&](const EmbeddingNet& n, const DensityState& s,
                         Matrix* d_emb_out, std::map<int, double>* d_alpha_out,
                         ForwardCache* cache_out) {
      ForwardCache cache;
      Matrix emb = forward(n, features, cache);
      LossGradients base;
      std::size_t units = 0;
      switch (which) {
        case 0:
          base = contrastive_loss(emb, inst.pairs, 1.0);
          units = inst.pairs.positives.size() + inst.pairs.negatives.size();
          break;
        case 1:
          base = triplet_loss(emb, inst.triplets, 1.0);
          units = inst.triplets.triplets.size();
          break;
        default:
          base = npair_loss(emb, inst.tuplets);
          units = inst.tuplets.tuplets.size();
          break;
      }
      base.value /= static_cast<double>(units);
      for (double& g : base.d_embeddings.values) g /= static_cast<double>(units);
      RegularizerResult reg = density_regularizer(emb, inst.labels, s);
      JointObjective joint = joint_objective(base, reg, lambda);
      if (d_emb_out) *d_emb_out = std::move(joint.d_embeddings);
      if (d_alpha_out) *d_alpha_out = joint.d_alpha;
      if (cache_out) *cache_out = std::move(cache);
      return joint.value;
    };

    Matrix d_emb;
    std::map<int, double> d_alpha;
    ForwardCache cache;
    objective(net, state, &d_emb, &d_alpha, &cache);
    NetGradients net_grads = backward(net, cache, d_emb);

    std::vector<double> params = flatten_params(net, state.alphas);
    std::vector<double> analytic;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      analytic.insert(analytic.end(), net_grads.d_weights[li].values.begin(),
                      net_grads.d_weights[li].values.end());
      analytic.insert(analytic.end(), net_grads.d_bias[li].begin(),
                      net_grads.d_bias[li].end());
    }
    for (const auto& [cls, g] : d_alpha) analytic.push_back(g);

    results.push_back(check(
        joint_names[which], params, analytic,
        [&](const std::vector<double>& p) {
          EmbeddingNet n = net;
          DensityState s = state;
          unflatten_params(p, n, s.alphas);
          return objective(n, s, nullptr, nullptr, nullptr);
        },
        opt));
  }

  return results;
}

bool all_passed(const std::vector<GradCheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const GradCheckResult& r) { return r.passed; });
}

}  // namespace dml
