#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "naim/tape.hpp"

namespace naim {

// Central-difference check of tape gradients. `build` maps a fresh tape and a
// leaf id for x to a scalar root. Returns the worst relative error
// |g_ad - g_fd| / max(1, |g_ad|, |g_fd|) over every coordinate of x.
inline double finite_difference_check(const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& build,
                                      const Tensor& x, double step = 1e-5) {
  Tape tape;
  Tape::NodeId leaf = tape.leaf(x);
  Tape::NodeId root = build(tape, leaf);
  tape.backward(root);
  const Tensor g_ad = tape.grad(leaf);

  auto eval = [&](const Tensor& xv) {
    Tape t;
    Tape::NodeId l = t.leaf(xv);
    Tape::NodeId r = build(t, l);
    return t.value(r).data[0];
  };

  double worst = 0.0;
  Tensor xp = x;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double orig = xp.data[i];
    xp.data[i] = orig + step;
    const double fp = eval(xp);
    xp.data[i] = orig - step;
    const double fm = eval(xp);
    xp.data[i] = orig;
    const double g_fd = (fp - fm) / (2.0 * step);
    const double denom = std::max({1.0, std::fabs(g_ad.data[i]), std::fabs(g_fd)});
    worst = std::max(worst, std::fabs(g_ad.data[i] - g_fd) / denom);
  }
  return worst;
}

}  // namespace naim
