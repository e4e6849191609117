#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "snnlab/tensor.hpp"

namespace snnlab {

// One synthetic scene: a bright ellipse over a dark background. target is
// (center_x/w, center_y/h, radius/min(h,w)) -- the normalized blob center
// plus apparent size as the depth proxy.
struct Scene {
  Tensor image;  // [3,H,W] in [0,1]
  std::array<double, 3> target{};
  double rho_actual = 0.0;
};

struct ManifestItem {
  std::string path;  // relative to the manifest file
  std::array<double, 3> target{};
  double rho = 0.0;
};

struct GeneratorParams {
  int n_per_bucket = 0;
  int height = 0;
  int width = 0;
  std::vector<double> rho_values;
  double noise_sigma = 0.005;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  GeneratorParams params;
  std::vector<ManifestItem> items;

  std::size_t bucket_count() const { return params.rho_values.size(); }
  // Items are emitted round-robin across buckets: item k belongs to bucket
  // k % bucket_count().
  std::size_t bucket_of(std::size_t item_index) const {
    return item_index % bucket_count();
  }
};

// Renders one scene whose dark-pixel ratio approximates rho_target.
// Throws InfeasibleError when no ellipse of the required area fits.
Scene gen_scene(int h, int w, double rho_target, double noise_sigma, std::uint64_t seed);

// Binary PPM (P6, maxval 255). Round-trip error is bounded by the 8-bit
// quantization step.
void write_image(const Tensor& image, const std::string& path);
Tensor read_image(const std::string& path);

// Generates n scenes per rho value under out_dir and writes
// out_dir/manifest.json. Scene seeds advance round-robin across buckets.
DatasetManifest gen_dataset(int n, int h, int w, const std::vector<double>& rho_values,
                            double noise_sigma, std::uint64_t seed,
                            const std::string& out_dir);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Resolves an item path against the manifest's directory.
std::string manifest_item_path(const std::string& manifest_path, const ManifestItem& item);

}  // namespace snnlab
