#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dml/data_io.hpp"
#include "dml/density.hpp"
#include "dml/model.hpp"
#include "dml/sampler.hpp"

namespace dml {

enum class LossKind { Contrastive, Triplet, Npair };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::Contrastive;
  double lambda = 10.0;
  double eta = 0.5;
  double margin = 1.0;
  double alpha_init = 0.5;
  std::size_t classes_per_batch = 10;
  std::size_t samples_per_class = 10;
  bool accumulate_mode = false;
  std::size_t triplet_per_anchor = 5;
  double learning_rate = 1e-3;
  double alpha_lr_mult = 1.0;
  std::size_t iterations = 3000;
  std::uint64_t seed = 0;
  std::size_t hidden_dim = 256;
  std::size_t embedding_dim = 128;
  std::size_t log_interval = 50;
  bool global_class_normalization = false;

  std::string echo() const;  // flat key=value lines, stored in checkpoints
};

struct LogRecord {
  std::uint64_t iteration = 0;
  double loss_base = 0.0;   // per mined unit
  double loss_da = 0.0;     // regularizer value (before lambda)
  double mean_alpha = 0.0;
  double mean_batch_density = 0.0;
};

using LogSink = std::function<void(const LogRecord&)>;

// One Adam-trained run: sample batch, mine, base loss (normalized by
// mined-unit count), density regularizer, combine, backprop, update
// theta and alpha jointly. Resumes from `start` when given.
Checkpoint train(const TrainConfig& config, const Dataset& dataset,
                 const LogSink& log_sink = nullptr,
                 const Checkpoint* start = nullptr);

std::string format_log_record(const LogRecord& rec);

}  // namespace dml
