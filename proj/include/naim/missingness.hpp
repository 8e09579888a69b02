#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "naim/common.hpp"
#include "naim/data.hpp"

namespace naim {

struct McarSpec {
  double rate = 0.0;  // target total missing fraction p in [0, 1)
  std::uint64_t seed = 0;
};

struct AugmentationPolicy {
  double probability = 0.5;
};

// MCAR injection: masks round-half-up(j*n*p) - existing_missing new cells,
// uniformly without replacement among observed cells. Only the present grid
// changes. A repair loop then restores one uniformly-chosen *injected* cell
// in any fully-missing row/column (natively-missing cells have no value to
// restore) and masks a uniformly-chosen replacement among the other observed
// cells, re-checking until clean; it aborts after j*n iterations.
inline TabularDataset inject_mcar(const TabularDataset& d, const McarSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw InjectionError("inject_mcar: rate must be in [0, 1)");
  const std::size_t J = d.n;
  const std::size_t N = d.feature_count();
  if (J == 0 || N == 0) {
    if (spec.rate == 0.0) return d;
    throw InjectionError("inject_mcar: empty dataset");
  }

  const auto target = static_cast<std::size_t>(
      std::llround(spec.rate * static_cast<double>(J) * static_cast<double>(N)));
  const std::size_t existing = d.missing_count();
  if (target <= existing) return d;  // nothing to inject (includes p=0)
  const std::size_t need = target - existing;

  const std::size_t max_missing = J * N - std::max(J, N);  // presents must cover all rows and columns
  if (target > max_missing)
    throw InjectionError("inject_mcar: target of " + std::to_string(target) + " missing cells on a " +
                         std::to_string(J) + "x" + std::to_string(N) +
                         " grid cannot avoid a fully-missing row or column");

  TabularDataset out = d;
  std::vector<std::uint8_t> injected(J * N, 0);
  Rng rng(spec.seed);

  std::vector<std::size_t> observed;
  observed.reserve(J * N - existing);
  for (std::size_t i = 0; i < J * N; ++i)
    if (out.present[i]) observed.push_back(i);
  rng.partial_shuffle(observed, need);
  for (std::size_t i = 0; i < need; ++i) {
    out.present[observed[i]] = 0;
    injected[observed[i]] = 1;
  }

  std::vector<std::size_t> row_obs(J, 0), col_obs(N, 0);
  auto recount = [&] {
    std::fill(row_obs.begin(), row_obs.end(), 0);
    std::fill(col_obs.begin(), col_obs.end(), 0);
    for (std::size_t r = 0; r < J; ++r)
      for (std::size_t f = 0; f < N; ++f)
        if (out.present[r * N + f]) {
          ++row_obs[r];
          ++col_obs[f];
        }
  };
  recount();

  for (std::size_t iter = 0; iter <= J * N; ++iter) {
    // first offending line in scan order: rows, then columns
    long bad_row = -1, bad_col = -1;
    for (std::size_t r = 0; r < J && bad_row < 0; ++r)
      if (row_obs[r] == 0) bad_row = static_cast<long>(r);
    if (bad_row < 0)
      for (std::size_t f = 0; f < N && bad_col < 0; ++f)
        if (col_obs[f] == 0) bad_col = static_cast<long>(f);
    if (bad_row < 0 && bad_col < 0) return out;
    if (iter == J * N)
      throw InjectionError("inject_mcar: repair loop exceeded its iteration bound");

    std::vector<std::size_t> candidates;
    if (bad_row >= 0) {
      for (std::size_t f = 0; f < N; ++f)
        if (injected[static_cast<std::size_t>(bad_row) * N + f]) candidates.push_back(static_cast<std::size_t>(bad_row) * N + f);
    } else {
      for (std::size_t r = 0; r < J; ++r)
        if (injected[r * N + static_cast<std::size_t>(bad_col)]) candidates.push_back(r * N + static_cast<std::size_t>(bad_col));
    }
    if (candidates.empty())
      throw InjectionError("inject_mcar: a fully-missing line contains no injected cell to restore "
                           "(the input already violated the no-full-line requirement)");
    const std::size_t restore = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
    out.present[restore] = 1;
    injected[restore] = 0;
    ++row_obs[restore / N];
    ++col_obs[restore % N];

    std::vector<std::size_t> repl;
    repl.reserve(J * N - target + 1);
    for (std::size_t i = 0; i < J * N; ++i)
      if (out.present[i] && i != restore) repl.push_back(i);
    if (repl.empty()) throw InjectionError("inject_mcar: no replacement cell available during repair");
    const std::size_t victim = repl[static_cast<std::size_t>(rng.below(repl.size()))];
    out.present[victim] = 0;
    injected[victim] = 1;
    --row_obs[victim / N];
    --col_obs[victim % N];
  }
  throw InjectionError("inject_mcar: unreachable repair state");
}

// Per-sample masking regularization. Draw order is fixed: the Bernoulli coin
// first, then (only when it fires and v >= 2) the count c uniform on
// {1,...,v-1}, then the c positions via a partial shuffle of the present
// indices. Returns the augmented presence vector; values are never touched.
inline std::vector<std::uint8_t> augment_present(const std::vector<std::uint8_t>& present, Rng& rng,
                                                 const AugmentationPolicy& policy = {}) {
  std::vector<std::uint8_t> out = present;
  const double coin = rng.uniform();
  if (coin >= policy.probability) return out;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < present.size(); ++i)
    if (present[i]) idx.push_back(i);
  const std::size_t v = idx.size();
  if (v <= 1) return out;
  const std::size_t c = 1 + static_cast<std::size_t>(rng.below(v - 1));
  rng.partial_shuffle(idx, c);
  for (std::size_t i = 0; i < c; ++i) out[idx[i]] = 0;
  return out;
}

}  // namespace naim
