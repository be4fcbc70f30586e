#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dml/density.hpp"
#include "dml/linalg.hpp"
#include "dml/model.hpp"

namespace dml {

enum class Split { Train, Test };

struct Dataset {
  Matrix features;          // N x input_dim
  std::vector<int> labels;  // indices into label_names
  std::vector<std::string> label_names;
  Split split = Split::Train;

  std::size_t size() const { return features.rows; }
  std::size_t num_classes() const { return label_names.size(); }
  std::map<int, Matrix> features_by_class() const;
};

struct SynthConfig {
  std::size_t num_classes = 40;
  std::size_t samples_per_class = 30;
  std::size_t input_dim = 32;
  double noise_sigma = 0.25;
  std::uint64_t seed = 0;
};

// Per class: a direction drawn uniformly on the unit hypersphere plus
// per-coordinate Gaussian noise. Classes split into disjoint train and
// test halves (first half trains). Features are not pre-normalized.
std::pair<Dataset, Dataset> synthesize(const SynthConfig& cfg);

// Throws if the two label-name sets intersect (zero-shot protocol).
void check_disjoint_labels(const Dataset& train, const Dataset& test);

// Text format: "# n=<N> d=<D>" header, then "<label>,<v1>,...,<vD>" per
// row with full-precision floats. Binary variant: magic, version,
// little-endian 64-bit payload. load_features sniffs the magic.
void save_features(const Dataset& dataset, const std::string& path,
                   bool binary = false);
Dataset load_features(const std::string& path);

struct Checkpoint {
  EmbeddingNet net;
  AdamState adam;
  DensityState density;
  std::string config_echo;  // flat key=value lines of the run config
  std::uint64_t iteration = 0;
  std::string rng_state;    // serialized training rng, for resume-exactness

  bool operator==(const Checkpoint&) const = default;
};

// Single binary file with explicit section lengths so truncation and
// shape drift are detectable.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dml
