#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "naim/common.hpp"

namespace naim {

// Per-fold scoring record: positive-class scores with ground-truth labels.
struct ScoredFold {
  int fold = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  double auc = 0.0;
};

// One aggregated grid entry: mean AUC and standard error over folds.
struct GridCell {
  std::string method;
  double train_missing = 0.0;
  double test_missing = 0.0;
  double mean_auc = 0.0;
  double stderr_auc = 0.0;
  int folds = 0;
};

// Mann-Whitney AUC with midrank tie handling, O(n log n):
// (wins + 0.5*ties) / (P*N) over all positive-negative score pairs.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw MetricError("auc: scores/labels must be non-empty and equal length");
  std::size_t P = 0, N = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) ++P;
    else if (labels[i] == 0) ++N;
    else throw MetricError("auc: labels must be binary 0/1");
    if (!std::isfinite(scores[i])) throw MetricError("auc: non-finite score");
  }
  if (P == 0 || N == 0) throw MetricError("auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum += midrank;
    i = j;
  }
  const double U = pos_rank_sum - 0.5 * static_cast<double>(P) * static_cast<double>(P + 1);
  return U / (static_cast<double>(P) * static_cast<double>(N));
}

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (rank sum of positive differences)
  double p_value = 1.0;    // two-sided
  std::size_t n = 0;       // pairs remaining after zero-difference removal
  bool exact = true;
};

// Paired Wilcoxon signed-rank test. Zero differences are dropped; ties get
// midranks. For n <= 25 the p-value is exact (all 2^n sign patterns via a
// subset-sum DP over doubled midranks, which are integers); above that a
// tie-corrected normal approximation with continuity correction is used.
// Two-sided p = min(1, 2*min(P(W <= w), P(W >= w))).
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw MetricError("wilcoxon_signed_rank: paired vectors of equal non-zero length required");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw MetricError("wilcoxon_signed_rank: non-finite difference");
    if (d != 0.0) diff.push_back(d);
  }
  if (diff.empty()) throw MetricError("wilcoxon_signed_rank: all differences are zero (undefined)");

  const std::size_t n = diff.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::fabs(diff[x]) < std::fabs(diff[y]); });
  std::vector<double> rank(n, 0.0);
  std::vector<std::size_t> tie_sizes;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && std::fabs(diff[order[j]]) == std::fabs(diff[order[i]])) ++j;
      const double midrank = 0.5 * static_cast<double>(i + 1 + j);
      for (std::size_t t = i; t < j; ++t) rank[order[t]] = midrank;
      tie_sizes.push_back(j - i);
      i = j;
    }
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (diff[i] > 0.0) w_plus += rank[i];

  WilcoxonResult res;
  res.statistic = w_plus;
  res.n = n;

  if (n <= 25) {
    // counts[s] = number of sign patterns with doubled W+ equal to s
    const std::size_t total = n * (n + 1);  // sum of doubled ranks
    std::vector<double> counts(total + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r2 = static_cast<std::size_t>(std::llround(2.0 * rank[i]));
      for (std::size_t s = total + 1; s-- > r2;) counts[s] += counts[s - r2];
    }
    const double denom = std::pow(2.0, static_cast<double>(n));
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w_plus));
    double p_le = 0.0, p_ge = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= w2) p_le += counts[s];
      if (s >= w2) p_ge += counts[s];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge) / denom);
    res.exact = true;
  } else {
    const double nd = static_cast<double>(n);
    const double mu = nd * (nd + 1.0) / 4.0;
    double tie_corr = 0.0;
    for (std::size_t t : tie_sizes) {
      const double td = static_cast<double>(t);
      tie_corr += td * td * td - td;
    }
    const double sigma2 = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_corr / 48.0;
    const double sigma = std::sqrt(sigma2);
    double z = w_plus - mu;
    z += (z > 0.0 ? -0.5 : (z < 0.0 ? 0.5 : 0.0));  // continuity correction toward the mean
    z /= sigma;
    res.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    res.exact = false;
  }
  return res;
}

inline GridCell aggregate_cell(const std::string& method, double train_missing, double test_missing,
                               const std::vector<ScoredFold>& folds) {
  if (folds.size() < 2) throw MetricError("aggregate_cell: need >= 2 folds");
  GridCell cell;
  cell.method = method;
  cell.train_missing = train_missing;
  cell.test_missing = test_missing;
  cell.folds = static_cast<int>(folds.size());
  double mean = 0.0;
  for (const ScoredFold& f : folds) mean += f.auc;
  mean /= static_cast<double>(folds.size());
  double ss = 0.0;
  for (const ScoredFold& f : folds) ss += (f.auc - mean) * (f.auc - mean);
  const double sd = std::sqrt(ss / static_cast<double>(folds.size() - 1));
  cell.mean_auc = mean;
  cell.stderr_auc = sd / std::sqrt(static_cast<double>(folds.size()));
  return cell;
}

}  // namespace naim
