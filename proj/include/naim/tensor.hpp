#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "naim/common.hpp"

namespace naim {

// Dense row-major double tensor. Rank 1 and 2 cover everything the model
// needs; higher ranks are allowed for storage but matrix ops require rank 2.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(t.count(), 0.0);
    return t;
  }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data) x = v;
    return t;
  }

  static Tensor row(std::initializer_list<double> xs) {
    Tensor t;
    t.shape = {1, xs.size()};
    t.data.assign(xs.begin(), xs.end());
    return t;
  }

  static Tensor matrix(std::size_t r, std::size_t c, std::initializer_list<double> xs) {
    if (xs.size() != r * c) throw ShapeError("Tensor::matrix: element count mismatch");
    Tensor t;
    t.shape = {r, c};
    t.data.assign(xs.begin(), xs.end());
    return t;
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    Tensor t;
    t.shape = {rows.size(), rows.size() ? rows.begin()->size() : 0};
    for (const auto& r : rows) {
      if (r.size() != t.shape[1]) throw ShapeError("Tensor::matrix: ragged rows");
      t.data.insert(t.data.end(), r.begin(), r.end());
    }
    return t;
  }

  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const {
    require_rank2("rows");
    return shape[0];
  }
  std::size_t cols() const {
    require_rank2("cols");
    return shape[1];
  }

  double& at(std::size_t r, std::size_t c) {
    require_rank2("at");
    return data[r * shape[1] + c];
  }
  double at(std::size_t r, std::size_t c) const {
    require_rank2("at");
    return data[r * shape[1] + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

 private:
  void require_rank2(const char* who) const {
    if (shape.size() != 2) throw ShapeError(std::string("Tensor::") + who + ": rank-2 required, have " + shape_str());
  }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace naim
