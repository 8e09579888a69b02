#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "naim/common.hpp"
#include "naim/tensor.hpp"

namespace naim {

// A named trainable tensor; the order of a parameter list is part of the
// checkpoint format and of Adam state identity, so it must stay fixed.
struct NamedParam {
  std::string name;
  Tensor* value = nullptr;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected moments. Weight decay (l2) and the l1 sign term
// are decoupled: applied directly to the parameter after the moment update,
// so their strength does not pass through the moment estimates.
struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<Tensor> m, v;

  void init(const std::vector<NamedParam>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const NamedParam& p : params) {
      m.push_back(Tensor::zeros(p.value->shape));
      v.push_back(Tensor::zeros(p.value->shape));
    }
  }
};

inline void adam_step(std::vector<NamedParam>& params, const std::vector<const Tensor*>& grads,
                      AdamState& state, double lr, double l2 = 0.0, double l1 = 0.0) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const double b1 = state.config.beta1, b2 = state.config.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].value;
    const Tensor& g = *grads[i];
    require_same_shape(p, g, "adam_step");
    if (!g.all_finite())
      throw NumericError("adam_step: non-finite gradient for parameter '" + params[i].name + "'");
    Tensor& mi = state.m[i];
    Tensor& vi = state.v[i];
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      mi.data[k] = b1 * mi.data[k] + (1.0 - b1) * g.data[k];
      vi.data[k] = b2 * vi.data[k] + (1.0 - b2) * g.data[k] * g.data[k];
      const double mhat = mi.data[k] / bc1;
      const double vhat = vi.data[k] / bc2;
      double upd = mhat / (std::sqrt(vhat) + state.config.eps);
      if (l2 != 0.0) upd += l2 * p.data[k];
      if (l1 != 0.0) upd += l1 * (p.data[k] > 0.0 ? 1.0 : (p.data[k] < 0.0 ? -1.0 : 0.0));
      p.data[k] -= lr * upd;
    }
  }
}

// Glorot uniform over [-b, b], b = sqrt(6 / (fan_in + fan_out)). For lookup
// tables fans come from the table dimensions (rows = fan_in, cols = fan_out).
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape,
                             Rng& rng) {
  const double b = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.uniform(-b, b);
  return t;
}

}  // namespace naim
