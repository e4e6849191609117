#include "snnlab/metrics.hpp"

#include <cmath>

namespace snnlab {

double dark_pixel_ratio(const Tensor& image, const DarkRatioConfig& cfg) {
  if (cfg.theta < 0.0 || cfg.theta > 1.0) {
    throw InvalidArgumentError("theta must lie in [0,1]");
  }
  int channels = 1;
  std::int64_t pixels = 0;
  if (image.rank() == 2) {
    pixels = image.numel();
  } else if (image.rank() == 3) {
    channels = image.shape[0];
    pixels = static_cast<std::int64_t>(image.shape[1]) * image.shape[2];
  } else {
    throw ShapeError("dark_pixel_ratio expects [H,W] or [C,H,W], got " + image.shape_str());
  }
  if (cfg.intensity_mode == IntensityMode::Luma && channels != 3) {
    throw ShapeError("luma intensity requires a 3-channel image");
  }
  for (double v : image.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgumentError("pixel value outside [0,1]");
  }

  std::int64_t dark = 0;
  for (std::int64_t p = 0; p < pixels; ++p) {
    double intensity = 0.0;
    if (channels == 1 && image.rank() == 2) {
      intensity = image[p];
    } else if (cfg.intensity_mode == IntensityMode::MeanChannels) {
      for (int c = 0; c < channels; ++c) intensity += image[c * pixels + p];
      intensity /= channels;
    } else {
      intensity = 0.299 * image[0 * pixels + p] + 0.587 * image[1 * pixels + p] +
                  0.114 * image[2 * pixels + p];
    }
    if (intensity < cfg.theta) ++dark;  // strictly below the threshold
  }
  return static_cast<double>(dark) / static_cast<double>(pixels);
}

double mse(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mse shape mismatch: " + pred.shape_str() + " vs " + target.shape_str());
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.numel());
}

double sparsity(const Tensor& t) {
  std::int64_t zeros = 0;
  for (double v : t.data) {
    if (v == 0.0) ++zeros;
  }
  return static_cast<double>(zeros) / static_cast<double>(t.numel());
}

}  // namespace snnlab
