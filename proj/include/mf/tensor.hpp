#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "mf/error.hpp"

namespace mf {

// Row-major dense tensor of doubles. Rank 1 and 2 are what the models need.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), values(count(shape), 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != count(shape))
      throw ContractViolation("Tensor: values length does not match shape");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::initializer_list<std::size_t> s) {
    return Tensor(std::vector<std::size_t>(s));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  double* data() { return values.data(); }
  const double* data() const { return values.data(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(values.begin(), values.end(), v); }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + ")";
}

}  // namespace mf
