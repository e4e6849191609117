#pragma once

#include "snnlab/tensor.hpp"

namespace snnlab {

enum class IntensityMode { MeanChannels, Luma };

struct DarkRatioConfig {
  double theta = 0.05;
  IntensityMode intensity_mode = IntensityMode::MeanChannels;
};

// Fraction of pixels whose intensity is strictly below cfg.theta.
// Accepts [H,W] or [C,H,W] images with values in [0,1].
double dark_pixel_ratio(const Tensor& image, const DarkRatioConfig& cfg = {});

// Mean over all elements of squared differences.
double mse(const Tensor& pred, const Tensor& target);

// Fraction of exactly-zero elements.
double sparsity(const Tensor& t);

}  // namespace snnlab
