#include "dml/sampler.hpp"

#include <algorithm>
#include <map>

#include "dml/errors.hpp"

namespace dml {

namespace {

std::map<int, std::vector<std::size_t>> rows_by_class(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
  return by_class;
}

}  // namespace

Batch make_batch(const Dataset& dataset, const BatchPlan& plan, Rng& rng) {
  auto by_class = rows_by_class(dataset.labels);
  if (by_class.size() < plan.classes_per_batch)
    throw InsufficientClasses("dataset has " + std::to_string(by_class.size()) +
                              " classes, plan needs " +
                              std::to_string(plan.classes_per_batch));

  std::vector<int> class_order;
  for (const auto& [cls, rows] : by_class) class_order.push_back(cls);
  shuffle(class_order, rng);

  std::vector<std::size_t> chosen;
  const std::size_t capacity = plan.classes_per_batch * plan.samples_per_class;
  if (plan.accumulate_mode) {
    // Whole classes in random order until the next one would overflow.
    for (int cls : class_order) {
      const auto& rows = by_class[cls];
      if (chosen.size() + rows.size() > capacity) break;
      chosen.insert(chosen.end(), rows.begin(), rows.end());
    }
    if (chosen.empty())
      throw InsufficientSamples("no class fits within the batch capacity");
  } else {
    for (std::size_t c = 0; c < plan.classes_per_batch; ++c) {
      auto rows = by_class[class_order[c]];
      if (rows.size() < plan.samples_per_class)
        throw InsufficientSamples("class " + std::to_string(class_order[c]) + " has " +
                                  std::to_string(rows.size()) + " samples, need " +
                                  std::to_string(plan.samples_per_class));
      shuffle(rows, rng);
      chosen.insert(chosen.end(), rows.begin(), rows.begin() + plan.samples_per_class);
    }
  }

  Batch batch;
  batch.features = Matrix(chosen.size(), dataset.features.cols);
  batch.labels.reserve(chosen.size());
  batch.source_indices = chosen;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    auto src = dataset.features.row(chosen[i]);
    std::copy(src.begin(), src.end(), batch.features.row(i).begin());
    batch.labels.push_back(dataset.labels[chosen[i]]);
  }
  return batch;
}

PairSet mine_pairs(const Batch& batch) {
  PairSet out;
  const std::size_t n = batch.labels.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      (batch.labels[i] == batch.labels[j] ? out.positives : out.negatives)
          .emplace_back(i, j);
  return out;
}

TripletSet mine_triplets(const Batch& batch, std::size_t per_anchor, Rng& rng) {
  auto by_class = rows_by_class(batch.labels);
  const std::size_t n = batch.labels.size();
  TripletSet out;
  for (std::size_t anchor = 0; anchor < n; ++anchor) {
    const auto& same = by_class[batch.labels[anchor]];
    if (same.size() < 2 || same.size() == n) continue;
    for (std::size_t t = 0; t < per_anchor; ++t) {
      std::size_t pos = anchor;
      while (pos == anchor) pos = same[uniform_index(rng, same.size())];
      std::size_t neg = anchor;
      while (batch.labels[neg] == batch.labels[anchor]) neg = uniform_index(rng, n);
      out.triplets.push_back({anchor, pos, neg});
    }
  }
  if (out.triplets.empty())
    throw NoValidTriplets("batch yields no triplets (need >= 2 classes, a class with >= 2 samples, and per_anchor > 0)");
  return out;
}

TupletSet mine_tuplets(const Batch& batch, Rng& rng) {
  auto by_class = rows_by_class(batch.labels);
  TupletSet out;
  for (std::size_t anchor = 0; anchor < batch.labels.size(); ++anchor) {
    const auto& same = by_class[batch.labels[anchor]];
    if (same.size() < 2 || by_class.size() < 2) continue;
    Tuplet t;
    t.anchor = anchor;
    t.positive = anchor;
    while (t.positive == anchor) t.positive = same[uniform_index(rng, same.size())];
    for (const auto& [cls, rows] : by_class) {
      if (cls == batch.labels[anchor]) continue;
      t.negatives.push_back(rows[uniform_index(rng, rows.size())]);
    }
    out.tuplets.push_back(std::move(t));
  }
  if (out.tuplets.empty())
    throw NoValidTuplets("batch yields no tuplets (need >= 2 classes and an anchor class with >= 2 samples)");
  return out;
}

}  // namespace dml
