#include "dml/train.hpp"

#include <cmath>
#include <sstream>

#include "dml/errors.hpp"
#include "dml/eval.hpp"
#include "dml/losses.hpp"

namespace dml {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "contrastive") return LossKind::Contrastive;
  if (name == "triplet") return LossKind::Triplet;
  if (name == "npair") return LossKind::Npair;
  throw Error("unknown loss '" + name + "' (expected contrastive|triplet|npair)");
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Contrastive: return "contrastive";
    case LossKind::Triplet: return "triplet";
    case LossKind::Npair: return "npair";
  }
  return "?";
}

std::string TrainConfig::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "loss=" << loss_kind_name(loss) << "\n"
     << "lambda=" << lambda << "\n"
     << "eta=" << eta << "\n"
     << "margin=" << margin << "\n"
     << "alpha_init=" << alpha_init << "\n"
     << "classes_per_batch=" << classes_per_batch << "\n"
     << "samples_per_class=" << samples_per_class << "\n"
     << "accumulate_mode=" << (accumulate_mode ? 1 : 0) << "\n"
     << "triplet_per_anchor=" << triplet_per_anchor << "\n"
     << "learning_rate=" << learning_rate << "\n"
     << "alpha_lr_mult=" << alpha_lr_mult << "\n"
     << "iterations=" << iterations << "\n"
     << "seed=" << seed << "\n"
     << "hidden_dim=" << hidden_dim << "\n"
     << "embedding_dim=" << embedding_dim << "\n"
     << "log_interval=" << log_interval << "\n"
     << "global_class_normalization=" << (global_class_normalization ? 1 : 0) << "\n";
  return os.str();
}

std::string format_log_record(const LogRecord& rec) {
  std::ostringstream os;
  os.precision(17);
  os << "iter=" << rec.iteration << " loss_base=" << rec.loss_base
     << " loss_da=" << rec.loss_da << " mean_alpha=" << rec.mean_alpha
     << " mean_batch_density=" << rec.mean_batch_density;
  return os.str();
}

Checkpoint train(const TrainConfig& config, const Dataset& dataset,
                 const LogSink& log_sink, const Checkpoint* start) {
  Checkpoint ckpt;
  Rng rng(config.seed);
  if (start) {
    ckpt = *start;
    std::istringstream ss(ckpt.rng_state);
    ss >> rng;
    if (!ss) throw CorruptCheckpoint("unreadable rng state in checkpoint");
    if (ckpt.net.input_dim() != dataset.features.cols)
      throw DimMismatch("checkpoint input dim does not match dataset");
  } else {
    // Separate stream for weight init so batch sampling starts at the
    // beginning of the seed's sequence.
    ckpt.net = make_default_net(dataset.features.cols, config.hidden_dim,
                                config.embedding_dim,
                                config.seed ^ 0xA5A5A5A5DEADBEEFull);
    ckpt.density.eta = config.eta;
    ckpt.density.lambda = config.lambda;
    ckpt.density.global_class_normalization = config.global_class_normalization;
    ckpt.density.d0 = compute_d0(dataset.features_by_class());
    for (const auto& [cls, d0] : ckpt.density.d0)
      ckpt.density.alphas[cls] = config.alpha_init;
    ckpt.iteration = 0;
    ckpt.config_echo = config.echo();
  }

  const BatchPlan plan{config.classes_per_batch, config.samples_per_class,
                       config.accumulate_mode};
  const std::size_t alpha_offset = ckpt.net.param_count();

  for (std::uint64_t it = ckpt.iteration + 1; it <= config.iterations; ++it) {
    Batch batch = make_batch(dataset, plan, rng);
    ForwardCache cache;
    Matrix embeddings = forward(ckpt.net, batch.features, cache);

    LossGradients base;
    std::size_t units = 0;
    switch (config.loss) {
      case LossKind::Contrastive: {
        PairSet pairs = mine_pairs(batch);
        units = pairs.positives.size() + pairs.negatives.size();
        base = contrastive_loss(embeddings, pairs, config.margin);
        break;
      }
      case LossKind::Triplet: {
        TripletSet triplets = mine_triplets(batch, config.triplet_per_anchor, rng);
        units = triplets.triplets.size();
        base = triplet_loss(embeddings, triplets, config.margin);
        break;
      }
      case LossKind::Npair: {
        TupletSet tuplets = mine_tuplets(batch, rng);
        units = tuplets.tuplets.size();
        base = npair_loss(embeddings, tuplets);
        break;
      }
    }
    // The paper's losses are sums; normalizing by the mined-unit count
    // here keeps lambda's meaning stable across batch compositions.
    base.value /= static_cast<double>(units);
    for (double& g : base.d_embeddings.values) g /= static_cast<double>(units);

    JointObjective joint;
    double reg_value = 0.0;
    if (config.lambda > 0.0) {
      RegularizerResult reg = density_regularizer(embeddings, batch.labels, ckpt.density);
      reg_value = reg.value;
      joint = joint_objective(base, reg, config.lambda);
    } else {
      joint.value = base.value;
      joint.d_embeddings = std::move(base.d_embeddings);
      for (const auto& [cls, a] : ckpt.density.alphas) joint.d_alpha[cls] = 0.0;
    }
    if (!std::isfinite(joint.value))
      throw DivergenceDetected("objective became non-finite at iteration " +
                               std::to_string(it));

    NetGradients net_grads = backward(ckpt.net, cache, joint.d_embeddings);
    std::vector<double> params = flatten_params(ckpt.net, ckpt.density.alphas);
    std::vector<double> grads;
    grads.reserve(params.size());
    for (std::size_t li = 0; li < ckpt.net.layers.size(); ++li) {
      grads.insert(grads.end(), net_grads.d_weights[li].values.begin(),
                   net_grads.d_weights[li].values.end());
      grads.insert(grads.end(), net_grads.d_bias[li].begin(),
                   net_grads.d_bias[li].end());
    }
    for (const auto& [cls, a] : ckpt.density.alphas) {
      auto it_g = joint.d_alpha.find(cls);
      grads.push_back(it_g == joint.d_alpha.end() ? 0.0 : it_g->second);
    }

    adam_step(params, grads, ckpt.adam, config.learning_rate, alpha_offset,
              config.alpha_lr_mult);
    unflatten_params(params, ckpt.net, ckpt.density.alphas);
    ckpt.iteration = it;

    if (log_sink && (it % config.log_interval == 0 || it == config.iterations)) {
      LogRecord rec;
      rec.iteration = it;
      rec.loss_base = base.value;
      rec.loss_da = reg_value;
      for (const auto& [cls, a] : ckpt.density.alphas) rec.mean_alpha += a;
      rec.mean_alpha /= static_cast<double>(ckpt.density.alphas.size());
      const auto densities = density_report(embeddings, batch.labels);
      for (const auto& [cls, d] : densities) rec.mean_batch_density += d;
      if (!densities.empty())
        rec.mean_batch_density /= static_cast<double>(densities.size());
      log_sink(rec);
    }
  }

  std::ostringstream ss;
  ss << rng;
  ckpt.rng_state = ss.str();
  return ckpt;
}

}  // namespace dml
