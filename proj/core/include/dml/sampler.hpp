#pragma once

#include <cstddef>
#include <vector>

#include "dml/data_io.hpp"
#include "dml/losses.hpp"
#include "dml/rng.hpp"

namespace dml {

struct BatchPlan {
  std::size_t classes_per_batch = 10;
  std::size_t samples_per_class = 10;
  // Add whole classes in random order until the next class would exceed
  // P*K rows; for datasets whose classes are smaller than K.
  bool accumulate_mode = false;
};

struct Batch {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::size_t> source_indices;
};

// Class-balanced batch: P distinct classes, K rows each, all sampled
// without replacement.
Batch make_batch(const Dataset& dataset, const BatchPlan& plan, Rng& rng);

// ALL unordered within-batch pairs, partitioned by label equality.
PairSet mine_pairs(const Batch& batch);

// per_anchor triplets for every anchor that has a same-class partner.
TripletSet mine_triplets(const Batch& batch, std::size_t per_anchor, Rng& rng);

// One tuplet per eligible anchor: a sampled positive plus one sampled
// negative from each other class present in the batch.
TupletSet mine_tuplets(const Batch& batch, Rng& rng);

}  // namespace dml
