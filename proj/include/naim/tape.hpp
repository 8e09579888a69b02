#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "naim/tensor.hpp"

namespace naim {

// Reverse-mode autodiff tape. Nodes are append-only and identified by dense
// int ids, so inputs always precede outputs and a single reverse sweep is a
// valid topological order. One tape per forward graph; not thread-safe —
// concurrent work uses one tape per thread.
class Tape {
 public:
  using NodeId = std::int32_t;
  static constexpr NodeId kZeroRow = -1;  // gather_rows source meaning "constant zero row"

  struct RowSpec {
    NodeId table = kZeroRow;  // kZeroRow -> zero row, no gradient flows
    std::size_t row = 0;
    double scale = 1.0;
  };

  NodeId leaf(Tensor t) { return push("leaf", std::move(t), {}); }

  // The reference stays valid as further nodes are added to the tape.
  const Tensor& value(NodeId id) const { return node(id).value; }

  // Gradient of the last backward() root w.r.t. node `id`; zeros if the node
  // was not reached (or no backward has run).
  const Tensor& grad(NodeId id) {
    Node& n = node(id);
    if (!n.grad_live) {
      n.grad = Tensor::zeros(n.value.shape);
      n.grad_live = true;
    }
    return n.grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

  // --- ops -----------------------------------------------------------------

  NodeId add(NodeId a, NodeId b) {
    const Tensor &va = value(a), &vb = value(b);
    require_same_shape(va, vb, "add");
    Tensor out = va;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
    return push("add", std::move(out), [a, b](Tape& t, const Tensor& g) {
      t.accum(a, g);
      t.accum(b, g);
    });
  }

  // x: [r x c], bias: [1 x c], broadcast over rows.
  NodeId add_rowvec(NodeId x, NodeId b) {
    const Tensor &vx = value(x), &vb = value(b);
    if (vb.rank() != 2 || vb.rows() != 1 || vx.rank() != 2 || vx.cols() != vb.cols())
      throw ShapeError("add_rowvec: need [r x c] + [1 x c], have " + vx.shape_str() + " + " + vb.shape_str());
    Tensor out = vx;
    for (std::size_t r = 0; r < vx.rows(); ++r)
      for (std::size_t c = 0; c < vx.cols(); ++c) out.at(r, c) += vb.at(0, c);
    return push("add_rowvec", std::move(out), [x, b](Tape& t, const Tensor& g) {
      t.accum(x, g);
      Tensor& gb = t.grad_buf(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb.at(0, c) += g.at(r, c);
    });
  }

  NodeId scale(NodeId x, double c) {
    Tensor out = value(x);
    for (double& v : out.data) v *= c;
    return push("scale", std::move(out), [x, c](Tape& t, const Tensor& g) {
      Tensor& gx = t.grad_buf(x);
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += c * g.data[i];
    });
  }

  NodeId mul(NodeId a, NodeId b) {
    const Tensor &va = value(a), &vb = value(b);
    require_same_shape(va, vb, "mul");
    Tensor out = va;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= vb.data[i];
    return push("mul", std::move(out), [a, b](Tape& t, const Tensor& g) {
      const Tensor &va = t.value(a), &vb = t.value(b);
      Tensor &ga = t.grad_buf(a), &gb = t.grad_buf(b);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i] * vb.data[i];
        gb.data[i] += g.data[i] * va.data[i];
      }
    });
  }

  NodeId relu(NodeId x) {
    Tensor out = value(x);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return push("relu", std::move(out), [x](Tape& t, const Tensor& g) {
      const Tensor& vx = t.value(x);
      Tensor& gx = t.grad_buf(x);
      for (std::size_t i = 0; i < g.data.size(); ++i)
        if (vx.data[i] > 0.0) gx.data[i] += g.data[i];
    });
  }

  NodeId matmul(NodeId a, NodeId b) {
    const Tensor &va = value(a), &vb = value(b);
    check_matmul(va, vb, "matmul");
    Tensor out = matmul_raw(va, vb);
    return push("matmul", std::move(out), [a, b](Tape& t, const Tensor& g) {
      // dA = g * B^T, dB = A^T * g
      matmul_nt_into(g, t.value(b), t.grad_buf(a));
      matmul_tn_into(t.value(a), g, t.grad_buf(b));
    });
  }

  NodeId transpose(NodeId x) {
    const Tensor& vx = value(x);
    if (vx.rank() != 2) throw ShapeError("transpose: rank-2 required");
    Tensor out = Tensor::zeros({vx.cols(), vx.rows()});
    for (std::size_t r = 0; r < vx.rows(); ++r)
      for (std::size_t c = 0; c < vx.cols(); ++c) out.at(c, r) = vx.at(r, c);
    return push("transpose", std::move(out), [x](Tape& t, const Tensor& g) {
      Tensor& gx = t.grad_buf(x);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gx.at(c, r) += g.at(r, c);
    });
  }

  // x*w + b (b broadcast over rows). Fused so big FF layers make one node.
  NodeId linear(NodeId x, NodeId w, NodeId b) {
    const Tensor &vx = value(x), &vw = value(w), &vb = value(b);
    check_matmul(vx, vw, "linear");
    if (vb.rank() != 2 || vb.rows() != 1 || vb.cols() != vw.cols())
      throw ShapeError("linear: bias must be [1 x out], have " + vb.shape_str());
    Tensor out = matmul_raw(vx, vw);
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += vb.at(0, c);
    return push("linear", std::move(out), [x, w, b](Tape& t, const Tensor& g) {
      matmul_nt_into(g, t.value(w), t.grad_buf(x));
      matmul_tn_into(t.value(x), g, t.grad_buf(w));
      Tensor& gb = t.grad_buf(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb.at(0, c) += g.at(r, c);
    });
  }

  // Row-wise softmax with excluded columns: blocked columns take no part in
  // the normalization and emit exact 0. When every column is blocked the whole
  // output is zero (defined this way so heavily-masked samples never produce
  // NaN; downstream masking zeroes those rows anyway).
  NodeId softmax_rows(NodeId x, std::vector<std::uint8_t> blocked_cols) {
    const Tensor& vx = value(x);
    if (vx.rank() != 2 || blocked_cols.size() != vx.cols())
      throw ShapeError("softmax_rows: mask size must match column count");
    bool any_open = false;
    for (std::uint8_t m : blocked_cols) any_open |= (m == 0);
    Tensor out = Tensor::zeros(vx.shape);
    for (std::size_t r = 0; r < vx.rows() && any_open; ++r) {
      double mx = -HUGE_VAL;
      for (std::size_t c = 0; c < vx.cols(); ++c)
        if (!blocked_cols[c]) mx = std::max(mx, vx.at(r, c));
      double z = 0.0;
      for (std::size_t c = 0; c < vx.cols(); ++c)
        if (!blocked_cols[c]) {
          out.at(r, c) = std::exp(vx.at(r, c) - mx);
          z += out.at(r, c);
        }
      for (std::size_t c = 0; c < vx.cols(); ++c)
        if (!blocked_cols[c]) out.at(r, c) /= z;
    }
    NodeId self = next_id();
    return push("softmax_rows", std::move(out),
                [x, self, blocked = std::move(blocked_cols)](Tape& t, const Tensor& g) {
                  const Tensor& y = t.value(self);
                  Tensor& gx = t.grad_buf(x);
                  for (std::size_t r = 0; r < y.rows(); ++r) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < y.cols(); ++c)
                      if (!blocked[c]) dot += g.at(r, c) * y.at(r, c);
                    for (std::size_t c = 0; c < y.cols(); ++c)
                      if (!blocked[c]) gx.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
                  }
                });
  }

  // Zero the selected rows exactly (no arithmetic on their entries).
  NodeId zero_rows(NodeId x, std::vector<std::uint8_t> blocked_rows) {
    const Tensor& vx = value(x);
    if (vx.rank() != 2 || blocked_rows.size() != vx.rows())
      throw ShapeError("zero_rows: mask size must match row count");
    Tensor out = vx;
    for (std::size_t r = 0; r < vx.rows(); ++r)
      if (blocked_rows[r])
        for (std::size_t c = 0; c < vx.cols(); ++c) out.at(r, c) = 0.0;
    return push("zero_rows", std::move(out),
                [x, blocked = std::move(blocked_rows)](Tape& t, const Tensor& g) {
                  Tensor& gx = t.grad_buf(x);
                  for (std::size_t r = 0; r < g.rows(); ++r)
                    if (!blocked[r])
                      for (std::size_t c = 0; c < g.cols(); ++c) gx.at(r, c) += g.at(r, c);
                });
  }

  // Per-row normalization over columns: gain * (x - mean)/sqrt(var + eps) + bias.
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5) {
    const Tensor &vx = value(x), &vg = value(gain), &vb = value(bias);
    if (vx.rank() != 2) throw ShapeError("layer_norm: rank-2 required");
    if (vg.rank() != 2 || vg.rows() != 1 || vg.cols() != vx.cols() || !vb.same_shape(vg))
      throw ShapeError("layer_norm: gain/bias must be [1 x cols]");
    const std::size_t d = vx.cols();
    Tensor out = Tensor::zeros(vx.shape);
    for (std::size_t r = 0; r < vx.rows(); ++r) {
      double mean = 0.0;
      for (std::size_t c = 0; c < d; ++c) mean += vx.at(r, c);
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double dv = vx.at(r, c) - mean;
        var += dv * dv;
      }
      var /= static_cast<double>(d);
      const double inv = 1.0 / std::sqrt(var + eps);
      for (std::size_t c = 0; c < d; ++c)
        out.at(r, c) = vg.at(0, c) * (vx.at(r, c) - mean) * inv + vb.at(0, c);
    }
    return push("layer_norm", std::move(out), [x, gain, bias, eps](Tape& t, const Tensor& g) {
      const Tensor &vx = t.value(x), &vg = t.value(gain);
      Tensor &gx = t.grad_buf(x), &gg = t.grad_buf(gain), &gb = t.grad_buf(bias);
      const std::size_t d = vx.cols();
      for (std::size_t r = 0; r < vx.rows(); ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += vx.at(r, c);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double dv = vx.at(r, c) - mean;
          var += dv * dv;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        // xhat = (x - mean) * inv; dxhat = g * gain
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double xhat = (vx.at(r, c) - mean) * inv;
          const double dxhat = g.at(r, c) * vg.at(0, c);
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
          gg.at(0, c) += g.at(r, c) * xhat;
          gb.at(0, c) += g.at(r, c);
        }
        for (std::size_t c = 0; c < d; ++c) {
          const double xhat = (vx.at(r, c) - mean) * inv;
          const double dxhat = g.at(r, c) * vg.at(0, c);
          gx.at(r, c) += inv * (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / static_cast<double>(d));
        }
      }
    });
  }

  NodeId concat_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t c = value(parts[0]).cols();
    std::size_t rows = 0;
    for (NodeId p : parts) {
      if (value(p).rank() != 2 || value(p).cols() != c) throw ShapeError("concat_rows: column mismatch");
      rows += value(p).rows();
    }
    Tensor out = Tensor::zeros({rows, c});
    std::size_t r0 = 0;
    for (NodeId p : parts) {
      const Tensor& vp = value(p);
      std::copy(vp.data.begin(), vp.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r0 * c));
      r0 += vp.rows();
    }
    return push("concat_rows", std::move(out), [parts](Tape& t, const Tensor& g) {
      std::size_t r0 = 0;
      for (NodeId p : parts) {
        Tensor& gp = t.grad_buf(p);
        const std::size_t n = gp.data.size();
        const double* src = g.data.data() + r0 * g.cols();
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += src[i];
        r0 += gp.rows();
      }
    });
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t r = value(parts[0]).rows();
    std::size_t cols = 0;
    for (NodeId p : parts) {
      if (value(p).rank() != 2 || value(p).rows() != r) throw ShapeError("concat_cols: row mismatch");
      cols += value(p).cols();
    }
    Tensor out = Tensor::zeros({r, cols});
    std::size_t c0 = 0;
    for (NodeId p : parts) {
      const Tensor& vp = value(p);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < vp.cols(); ++j) out.at(i, c0 + j) = vp.at(i, j);
      c0 += vp.cols();
    }
    return push("concat_cols", std::move(out), [parts](Tape& t, const Tensor& g) {
      std::size_t c0 = 0;
      for (NodeId p : parts) {
        Tensor& gp = t.grad_buf(p);
        for (std::size_t i = 0; i < gp.rows(); ++i)
          for (std::size_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += g.at(i, c0 + j);
        c0 += gp.cols();
      }
    });
  }

  NodeId reshape(NodeId x, std::vector<std::size_t> shape) {
    Tensor out;
    out.shape = std::move(shape);
    out.data = value(x).data;
    if (out.count() != out.data.size()) throw ShapeError("reshape: element count mismatch");
    return push("reshape", std::move(out), [x](Tape& t, const Tensor& g) {
      Tensor& gx = t.grad_buf(x);
      for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    });
  }

  // Assemble a [specs.size() x width] matrix from scaled rows of leaf tables.
  // table == kZeroRow emits a constant zero row that routes no gradient, so a
  // frozen padding row needs no parameter storage at all.
  NodeId gather_rows(std::vector<RowSpec> specs, std::size_t width) {
    Tensor out = Tensor::zeros({specs.size(), width});
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const RowSpec& s = specs[i];
      if (s.table == kZeroRow) continue;
      const Tensor& tb = value(s.table);
      if (tb.rank() != 2 || tb.cols() != width) throw ShapeError("gather_rows: table width mismatch");
      if (s.row >= tb.rows()) throw ShapeError("gather_rows: row index out of range");
      for (std::size_t c = 0; c < width; ++c) out.at(i, c) = s.scale * tb.at(s.row, c);
    }
    return push("gather_rows", std::move(out), [specs = std::move(specs)](Tape& t, const Tensor& g) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        const RowSpec& s = specs[i];
        if (s.table == kZeroRow) continue;
        Tensor& gt = t.grad_buf(s.table);
        for (std::size_t c = 0; c < g.cols(); ++c) gt.at(s.row, c) += s.scale * g.at(i, c);
      }
    });
  }

  // Mean negative log-likelihood of integer labels under row-wise softmax.
  NodeId cross_entropy_logits(NodeId logits, std::vector<int> labels) {
    const Tensor& vz = value(logits);
    if (vz.rank() != 2 || labels.size() != vz.rows())
      throw ShapeError("cross_entropy_logits: one label per logits row required");
    const std::size_t B = vz.rows(), C = vz.cols();
    double loss = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
      const int y = labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= C)
        throw ShapeError("cross_entropy_logits: label out of range");
      double mx = vz.at(r, 0);
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, vz.at(r, c));
      double z = 0.0;
      for (std::size_t c = 0; c < C; ++c) z += std::exp(vz.at(r, c) - mx);
      loss += std::log(z) + mx - vz.at(r, static_cast<std::size_t>(y));
    }
    loss /= static_cast<double>(B);
    return push("cross_entropy_logits", Tensor::matrix(1, 1, {loss}),
                [logits, labels = std::move(labels)](Tape& t, const Tensor& g) {
                  const Tensor& vz = t.value(logits);
                  Tensor& gz = t.grad_buf(logits);
                  const std::size_t B = vz.rows(), C = vz.cols();
                  const double gs = g.at(0, 0) / static_cast<double>(B);
                  for (std::size_t r = 0; r < B; ++r) {
                    double mx = vz.at(r, 0);
                    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, vz.at(r, c));
                    double z = 0.0;
                    for (std::size_t c = 0; c < C; ++c) z += std::exp(vz.at(r, c) - mx);
                    for (std::size_t c = 0; c < C; ++c) {
                      double p = std::exp(vz.at(r, c) - mx) / z;
                      if (c == static_cast<std::size_t>(labels[r])) p -= 1.0;
                      gz.at(r, c) += gs * p;
                    }
                  }
                });
  }

  NodeId sum(NodeId x) {
    double s = 0.0;
    for (double v : value(x).data) s += v;
    return push("sum", Tensor::matrix(1, 1, {s}), [x](Tape& t, const Tensor& g) {
      Tensor& gx = t.grad_buf(x);
      for (double& v : gx.data) v += g.at(0, 0);
    });
  }

  // --- backward --------------------------------------------------------------

  // Seeds d(root)/d(root) = 1 and sweeps nodes in reverse creation order.
  // All gradients are cleared first, so repeated calls are independent.
  void backward(NodeId root) {
    Node& rn = node(root);
    if (rn.value.count() != 1)
      throw Error("backward: root must be scalar, have " + rn.value.shape_str());
    for (Node& n : nodes_) n.grad_live = false;
    grad_buf(root).data[0] = 1.0;
    for (NodeId i = root; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.grad_live || !n.back) continue;
      n.back(*this, n.grad);
      if (!n.grad.all_finite())
        throw NumericError(std::string("backward: non-finite gradient leaving op '") + n.op + "'");
    }
  }

  void accum(NodeId id, const Tensor& g) {
    Tensor& buf = grad_buf(id);
    for (std::size_t i = 0; i < g.data.size(); ++i) buf.data[i] += g.data[i];
  }

  // Zeroed-or-allocated gradient buffer; backward lambdas accumulate into it.
  Tensor& grad_buf(NodeId id) {
    Node& n = node(id);
    if (!n.grad_live) {
      if (n.grad.shape != n.value.shape) n.grad = Tensor::zeros(n.value.shape);
      else std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
      n.grad_live = true;
    }
    return n.grad;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_live = false;
    std::function<void(Tape&, const Tensor&)> back;
    const char* op = "";
  };

  // Deque, not vector: value()/grad() hand out references that must survive
  // subsequent node insertions.
  std::deque<Node> nodes_;

  NodeId next_id() const { return static_cast<NodeId>(nodes_.size()); }

  NodeId push(const char* op, Tensor value, std::function<void(Tape&, const Tensor&)> back) {
    if (!value.all_finite())
      throw NumericError(std::string("forward: non-finite value produced by op '") + op + "'");
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    n.op = op;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  Node& node(NodeId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw Error("Tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }
  const Node& node(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw Error("Tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }

  static void check_matmul(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
      throw ShapeError(std::string(op) + ": inner dimensions mismatch " + a.shape_str() + " * " + b.shape_str());
  }

  static Tensor matmul_raw(const Tensor& a, const Tensor& b) {
    Tensor out = Tensor::zeros({a.rows(), b.cols()});
    mm_accum(a.data.data(), b.data.data(), out.data.data(), a.rows(), a.cols(), b.cols());
    return out;
  }

  // out += a * b^T where a: [r x k], b: [c x k]  (i.e. grad * value^T patterns)
  static void matmul_nt_into(const Tensor& a, const Tensor& bT, Tensor& out) {
    const std::size_t r = a.rows(), k = a.cols(), c = bT.rows();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        const double* pa = a.data.data() + i * k;
        const double* pb = bT.data.data() + j * k;
        for (std::size_t t = 0; t < k; ++t) s += pa[t] * pb[t];
        out.at(i, j) += s;
      }
  }

  // out += a^T * b where a: [k x r], b: [k x c]
  static void matmul_tn_into(const Tensor& aT, const Tensor& b, Tensor& out) {
    const std::size_t k = aT.rows(), r = aT.cols(), c = b.cols();
    for (std::size_t t = 0; t < k; ++t) {
      const double* pa = aT.data.data() + t * r;
      const double* pb = b.data.data() + t * c;
      for (std::size_t i = 0; i < r; ++i) {
        const double ai = pa[i];
        if (ai == 0.0) continue;
        double* po = out.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) po[j] += ai * pb[j];
      }
    }
  }

  // out += a * b, cache-friendly ikj order, inner loop contiguous in b and out.
  static void mm_accum(const double* a, const double* b, double* out, std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
      const double* pa = a + i * k;
      double* po = out + i * c;
      for (std::size_t t = 0; t < k; ++t) {
        const double at = pa[t];
        if (at == 0.0) continue;
        const double* pb = b + t * c;
        for (std::size_t j = 0; j < c; ++j) po[j] += at * pb[j];
      }
    }
  }
};

}  // namespace naim
