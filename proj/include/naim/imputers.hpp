#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "naim/common.hpp"
#include "naim/data.hpp"

namespace naim {

// Mean/mode constant imputer, fitted on the (encoded) training split:
// numerical features take the observed mean (0.5 when nothing is observed),
// categoricals the modal code (ties -> lower code; code 0 when nothing is
// observed).
struct MeanImputer {
  std::vector<double> fill;  // per feature

  static MeanImputer fit(const TabularDataset& train) {
    if (!train.encoded) throw DataError("MeanImputer::fit: expects an encoded dataset");
    MeanImputer imp;
    const std::size_t F = train.feature_count();
    imp.fill.resize(F, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
      if (train.schema.features[f].kind == FeatureKind::Numerical) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t r = 0; r < train.n; ++r)
          if (train.present_at(r, f)) {
            sum += train.value_at(r, f);
            ++cnt;
          }
        imp.fill[f] = cnt ? sum / static_cast<double>(cnt) : 0.5;
      } else {
        std::map<long, std::size_t> counts;
        for (std::size_t r = 0; r < train.n; ++r)
          if (train.present_at(r, f)) ++counts[static_cast<long>(std::llround(train.value_at(r, f)))];
        long best = 0;
        std::size_t best_count = 0;
        for (const auto& [code, cnt] : counts)
          if (cnt > best_count) {  // map iterates ascending -> ties keep the lower code
            best = code;
            best_count = cnt;
          }
        imp.fill[f] = static_cast<double>(best);
      }
    }
    return imp;
  }

  TabularDataset apply(const TabularDataset& d) const {
    if (!d.encoded) throw DataError("MeanImputer::apply: expects an encoded dataset");
    if (d.feature_count() != fill.size()) throw DataError("MeanImputer::apply: feature count mismatch");
    TabularDataset out = d;
    for (std::size_t r = 0; r < d.n; ++r)
      for (std::size_t f = 0; f < fill.size(); ++f)
        if (!out.present[out.idx(r, f)]) {
          out.values[out.idx(r, f)] = fill[f];
          out.present[out.idx(r, f)] = 1;
        }
    return out;
  }
};

// KNN imputer over the encoded grid. Distance between two rows is the masked
// Euclidean sqrt(mean of squared differences over coordinates observed in
// both); rows sharing no coordinate are skipped. Each missing cell takes the
// unweighted mean (numerical) or the mode (categorical, ties -> lower code)
// of that cell over the k nearest training rows that observe it, falling back
// to the mean imputer when none does. Distance ties break on the lower
// training-row index.
struct KnnImputer {
  std::size_t k = 5;
  TabularDataset train;
  MeanImputer fallback;

  static KnnImputer fit(const TabularDataset& train, std::size_t k = 5) {
    if (!train.encoded) throw DataError("KnnImputer::fit: expects an encoded dataset");
    if (train.n == 0) throw DataError("KnnImputer::fit: empty training set");
    if (k < 1 || k > train.n)
      throw DataError("KnnImputer::fit: k must be in [1, training size]");
    KnnImputer imp;
    imp.k = k;
    imp.train = train;
    imp.fallback = MeanImputer::fit(train);
    return imp;
  }

  TabularDataset apply(const TabularDataset& d) const {
    if (!d.encoded) throw DataError("KnnImputer::apply: expects an encoded dataset");
    const std::size_t F = train.feature_count();
    if (d.feature_count() != F) throw DataError("KnnImputer::apply: feature count mismatch");
    TabularDataset out = d;
    for (std::size_t r = 0; r < d.n; ++r) {
      bool any_missing = false;
      for (std::size_t f = 0; f < F; ++f) any_missing |= !d.present_at(r, f);
      if (!any_missing) continue;

      // (distance, train row), only rows with >= 1 shared observed coordinate
      std::vector<std::pair<double, std::size_t>> near;
      for (std::size_t t = 0; t < train.n; ++t) {
        double ss = 0.0;
        std::size_t shared = 0;
        for (std::size_t f = 0; f < F; ++f) {
          if (!d.present_at(r, f) || !train.present_at(t, f)) continue;
          const double diff = d.value_at(r, f) - train.value_at(t, f);
          ss += diff * diff;
          ++shared;
        }
        if (shared == 0) continue;
        near.emplace_back(std::sqrt(ss / static_cast<double>(shared)), t);
      }
      const std::size_t take = std::min(k, near.size());
      std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(take), near.end());

      for (std::size_t f = 0; f < F; ++f) {
        if (out.present[out.idx(r, f)]) continue;
        if (train.schema.features[f].kind == FeatureKind::Numerical) {
          double sum = 0.0;
          std::size_t cnt = 0;
          for (std::size_t i = 0; i < take; ++i) {
            const std::size_t t = near[i].second;
            if (train.present_at(t, f)) {
              sum += train.value_at(t, f);
              ++cnt;
            }
          }
          out.values[out.idx(r, f)] = cnt ? sum / static_cast<double>(cnt) : fallback.fill[f];
        } else {
          std::map<long, std::size_t> counts;
          for (std::size_t i = 0; i < take; ++i) {
            const std::size_t t = near[i].second;
            if (train.present_at(t, f)) ++counts[static_cast<long>(std::llround(train.value_at(t, f)))];
          }
          if (counts.empty()) {
            out.values[out.idx(r, f)] = fallback.fill[f];
          } else {
            long best = 0;
            std::size_t best_count = 0;
            for (const auto& [code, cnt] : counts)
              if (cnt > best_count) {
                best = code;
                best_count = cnt;
              }
            out.values[out.idx(r, f)] = static_cast<double>(best);
          }
        }
        out.present[out.idx(r, f)] = 1;
      }
    }
    return out;
  }
};

}  // namespace naim
