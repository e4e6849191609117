#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "snnlab/errors.hpp"

namespace snnlab {

// Dense row-major tensor of doubles. Shape dimensions are positive;
// data.size() == product(shape) always holds for a valid tensor.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_);
  Tensor(std::vector<int> shape_, std::vector<double> data_);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);

  std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data.size()); }
  int rank() const noexcept { return static_cast<int>(shape.size()); }

  double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  // Index helpers for the two ranks the networks use.
  double& at3(int c, int y, int x);
  double at3(int c, int y, int x) const;

  bool same_shape(const Tensor& other) const noexcept { return shape == other.shape; }
  bool all_finite() const noexcept;
  std::string shape_str() const;
};

std::int64_t shape_numel(const std::vector<int>& shape);

// 2-D convolution with zero padding.
//   input  [C_in, H, W]
//   kernel [C_out, C_in, k, k]
// Output [C_out, H', W'] with H' = floor((H + 2*pad - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);

// out[j] = sum_i weight[j,i] * input[i] (+ bias[j]); weight is [N_out, N_in].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor* bias = nullptr);

// Output spatial extent of a convolution, after validation.
int conv_out_dim(int in_dim, int k, int stride, int padding);

}  // namespace snnlab
