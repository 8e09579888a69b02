#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "naim/common.hpp"

namespace naim {

// Stratified k-fold plan with a stratified validation carve-out per fold.
struct FoldPlan {
  struct Fold {
    std::vector<int> train, validation, test;
  };
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

// Per-class seeded shuffle + round-robin test assignment, then a stratified
// 20% validation carve-out (round-to-nearest per class) from each fold's
// training pool. Index lists come out sorted for reproducible downstream use.
inline FoldPlan stratified_kfold(const std::vector<int>& labels, int n_classes, int k,
                                 std::uint64_t seed, double val_fraction = 0.2) {
  if (k < 2) throw SplitError("stratified_kfold: k must be >= 2");
  if (n_classes < 2) throw SplitError("stratified_kfold: need >= 2 classes");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw SplitError("stratified_kfold: bad validation fraction");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw SplitError("stratified_kfold: label out of range");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < n_classes; ++c)
    if (by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k))
      throw SplitError("stratified_kfold: class " + std::to_string(c) + " has " +
                       std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                       " samples, fewer than k=" + std::to_string(k));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));

  std::vector<int> fold_of(labels.size(), -1);
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int> idx = by_class[static_cast<std::size_t>(c)];
    Rng rng(mix64({seed, hash_str("fold-assign"), static_cast<std::uint64_t>(c)}));
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) fold_of[static_cast<std::size_t>(idx[j])] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    plan.folds[static_cast<std::size_t>(fold_of[i])].test.push_back(static_cast<int>(i));

  for (int f = 0; f < k; ++f) {
    FoldPlan::Fold& fold = plan.folds[static_cast<std::size_t>(f)];
    for (int c = 0; c < n_classes; ++c) {
      std::vector<int> pool;
      for (int i : by_class[static_cast<std::size_t>(c)])
        if (fold_of[static_cast<std::size_t>(i)] != f) pool.push_back(i);
      Rng rng(mix64({seed, hash_str("val-carve"), static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(c)}));
      rng.shuffle(pool);
      std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
      if (n_val >= pool.size() && !pool.empty()) n_val = pool.size() - 1;  // keep >=1 training sample per class
      for (std::size_t j = 0; j < pool.size(); ++j)
        (j < n_val ? fold.validation : fold.train).push_back(pool[j]);
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return plan;
}

}  // namespace naim
