#include "snnlab/tensor.hpp"

#include <cmath>
#include <sstream>

namespace snnlab {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + std::to_string(d));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_) : shape(std::move(shape_)) {
  data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str());
  }
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = value;
  return t;
}

double& Tensor::at3(int c, int y, int x) {
  const int h = shape[1], w = shape[2];
  return data[static_cast<std::size_t>((c * h + y) * w + x)];
}

double Tensor::at3(int c, int y, int x) const {
  const int h = shape[1], w = shape[2];
  return data[static_cast<std::size_t>((c * h + y) * w + x)];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

int conv_out_dim(int in_dim, int k, int stride, int padding) {
  const int span = in_dim + 2 * padding - k;
  if (span < 0) {
    throw GeometryError("kernel size " + std::to_string(k) + " exceeds padded input extent " +
                        std::to_string(in_dim + 2 * padding));
  }
  const int out = span / stride + 1;
  if (out < 1) throw GeometryError("convolution output dimension < 1");
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  if (input.rank() != 3) throw ShapeError("conv2d input must be rank 3, got " + input.shape_str());
  if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be rank 4, got " + kernel.shape_str());
  if (stride < 1) throw InvalidArgumentError("conv2d stride must be >= 1");
  if (padding < 0) throw InvalidArgumentError("conv2d padding must be >= 0");

  const int c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int c_out = kernel.shape[0], kc = kernel.shape[1], kh = kernel.shape[2], kw = kernel.shape[3];
  if (kc != c_in) {
    throw ShapeError("conv2d kernel channel count " + std::to_string(kc) +
                     " != input channel count " + std::to_string(c_in));
  }
  if (kh != kw) throw ShapeError("conv2d kernel must be square");

  const int oh = conv_out_dim(h, kh, stride, padding);
  const int ow = conv_out_dim(w, kw, stride, padding);

  Tensor out({c_out, oh, ow});
  for (int co = 0; co < c_out; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        const int y0 = oy * stride - padding;
        const int x0 = ox * stride - padding;
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= h) continue;  // zero padding
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= w) continue;
              acc += input.at3(ci, iy, ix) * kernel.data[static_cast<std::size_t>(
                         ((co * c_in + ci) * kh + ky) * kw + kx)];
            }
          }
        }
        out.at3(co, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor* bias) {
  if (input.rank() != 1) throw ShapeError("linear input must be rank 1, got " + input.shape_str());
  if (weight.rank() != 2) throw ShapeError("linear weight must be rank 2, got " + weight.shape_str());
  const int n_in = input.shape[0];
  const int n_out = weight.shape[0];
  if (weight.shape[1] != n_in) {
    throw ShapeError("linear weight expects " + std::to_string(weight.shape[1]) +
                     " inputs, got " + std::to_string(n_in));
  }
  if (bias && (bias->rank() != 1 || bias->shape[0] != n_out)) {
    throw ShapeError("linear bias shape " + bias->shape_str() + " != [" + std::to_string(n_out) + "]");
  }

  Tensor out({n_out});
  for (int j = 0; j < n_out; ++j) {
    double acc = bias ? bias->data[static_cast<std::size_t>(j)] : 0.0;
    const double* row = &weight.data[static_cast<std::size_t>(j) * n_in];
    for (int i = 0; i < n_in; ++i) acc += row[i] * input.data[static_cast<std::size_t>(i)];
    out.data[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

}  // namespace snnlab
