#include "snnlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "snnlab/errors.hpp"
#include "snnlab/metrics.hpp"
#include "snnlab/rng.hpp"
#include "json.hpp"

namespace snnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

// Background is kept strictly positive and well below the dark threshold:
// 0.005 quantizes to 1/255, so stored scenes never contain exact zeros and
// the dark ratio stays insensitive to the default noise level.
constexpr double kDarkLo = 0.005;
constexpr double kDarkHi = 0.025;
constexpr double kBrightLo = 0.65;
constexpr double kBrightHi = 1.0;

// Mild eccentricity so scenes are not all circles; area is preserved.
constexpr double kAspectLo = 0.85;
constexpr double kAspectHi = 1.18;

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + next_uniform01(rng) * (hi - lo);
}

}  // namespace

Scene gen_scene(int h, int w, double rho_target, double noise_sigma, std::uint64_t seed) {
  if (h < 8 || w < 8)
    throw InvalidArgumentError("image must be at least 8x8, got " + std::to_string(h) + "x" +
                               std::to_string(w));
  if (!(rho_target >= 0.0 && rho_target <= 0.995))
    throw InvalidArgumentError("rho_target must be in [0, 0.995], got " +
                               std::to_string(rho_target));
  if (!(noise_sigma >= 0.0))
    throw InvalidArgumentError("noise_sigma must be >= 0");

  std::mt19937_64 rng(seed);

  // Bright area covers (1 - rho) of the frame; solve pi*r^2 = area for the
  // nominal radius, then stretch into an area-preserving ellipse.
  const double area = (1.0 - rho_target) * static_cast<double>(h) * static_cast<double>(w);
  const double r = std::sqrt(area / kPi);

  double aspect = uniform_in(rng, kAspectLo, kAspectHi);
  double rx = r * aspect;
  double ry = r / aspect;
  if (2.0 * rx > static_cast<double>(w) || 2.0 * ry > static_cast<double>(h)) {
    // The stretched ellipse does not fit; fall back to the circle.
    rx = r;
    ry = r;
  }
  if (2.0 * rx > static_cast<double>(w) || 2.0 * ry > static_cast<double>(h))
    throw InfeasibleError("no blob of area " + std::to_string(area) + " fits in a " +
                          std::to_string(h) + "x" + std::to_string(w) +
                          " image; increase rho_target");

  const double cx = uniform_in(rng, rx, static_cast<double>(w) - rx);
  const double cy = uniform_in(rng, ry, static_cast<double>(h) - ry);

  double bright[3];
  for (double& c : bright) c = uniform_in(rng, kBrightLo, kBrightHi);
  double dark[3];
  for (double& c : dark) c = uniform_in(rng, kDarkLo, kDarkHi);

  Scene scene;
  scene.image = Tensor::zeros({3, h, w});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
        const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
        const bool inside = dx * dx + dy * dy <= 1.0;
        double v = inside ? bright[c] : dark[c];
        if (noise_sigma > 0.0) v += next_gaussian(rng, noise_sigma);
        scene.image.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }

  scene.target = {cx / static_cast<double>(w), cy / static_cast<double>(h),
                  r / static_cast<double>(std::min(h, w))};
  scene.rho_actual = dark_pixel_ratio(scene.image, DarkRatioConfig{});
  return scene;
}

void write_image(const Tensor& image, const std::string& path) {
  if (image.rank() != 3 || image.shape[0] != 3)
    throw ShapeError("write_image expects a [3,H,W] tensor, got " + image.shape_str());
  const int h = image.shape[1];
  const int w = image.shape[2];

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P6\n" << w << " " << h << "\n255\n";
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(3) * h * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = image.at3(c, y, x);
        if (!(v >= 0.0 && v <= 1.0))
          throw InvalidArgumentError("pixel value outside [0,1]");
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing image data to " + path);
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_ppm_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  while (ch != EOF && !std::isspace(static_cast<unsigned char>(ch))) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return tok;
}

int parse_ppm_int(std::istream& in, const char* what) {
  const std::string tok = next_ppm_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid PPM ") + what + ": '" + tok + "'");
  }
}

}  // namespace

Tensor read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (next_ppm_token(in) != "P6") throw ParseError(path + ": not a binary PPM (P6) file");
  const int w = parse_ppm_int(in, "width");
  const int h = parse_ppm_int(in, "height");
  const int maxval = parse_ppm_int(in, "maxval");
  if (w < 1 || h < 1) throw ParseError(path + ": non-positive image dimensions");
  if (maxval != 255) throw ParseError(path + ": unsupported maxval " + std::to_string(maxval));
  const int sep = in.get();
  if (sep == EOF || !std::isspace(static_cast<unsigned char>(sep)))
    throw ParseError(path + ": missing whitespace after maxval");

  const std::size_t n = static_cast<std::size_t>(3) * h * w;
  std::string bytes(n, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw ParseError(path + ": truncated pixel data");

  Tensor image = Tensor::zeros({3, h, w});
  std::size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        image.at3(c, y, x) = static_cast<double>(static_cast<unsigned char>(bytes[i++])) / 255.0;
  return image;
}

DatasetManifest gen_dataset(int n, int h, int w, const std::vector<double>& rho_values,
                            double noise_sigma, std::uint64_t seed,
                            const std::string& out_dir) {
  if (n < 1) throw InvalidArgumentError("n must be >= 1");
  if (rho_values.empty()) throw InvalidArgumentError("rho_values must be non-empty");

  std::filesystem::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.params = GeneratorParams{n, h, w, rho_values, noise_sigma};

  const std::size_t total = static_cast<std::size_t>(n) * rho_values.size();
  manifest.items.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    const double rho = rho_values[k % rho_values.size()];
    const Scene scene = gen_scene(h, w, rho, noise_sigma, splitmix64(seed + k));

    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.ppm", k);
    write_image(scene.image, (std::filesystem::path(out_dir) / name).string());
    manifest.items.push_back(ManifestItem{name, scene.target, scene.rho_actual});
  }

  save_manifest(manifest, (std::filesystem::path(out_dir) / "manifest.json").string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  ordered_json j;
  j["seed"] = manifest.seed;
  j["params"] = {{"n_per_bucket", manifest.params.n_per_bucket},
                 {"height", manifest.params.height},
                 {"width", manifest.params.width},
                 {"rho_values", manifest.params.rho_values},
                 {"noise_sigma", manifest.params.noise_sigma}};
  j["items"] = ordered_json::array();
  for (const ManifestItem& item : manifest.items) {
    j["items"].push_back({{"path", item.path},
                          {"target", {item.target[0], item.target[1], item.target[2]}},
                          {"rho", item.rho}});
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }

  DatasetManifest manifest;
  try {
    manifest.seed = j.at("seed").get<std::uint64_t>();
    const ordered_json& p = j.at("params");
    manifest.params.n_per_bucket = p.at("n_per_bucket").get<int>();
    manifest.params.height = p.at("height").get<int>();
    manifest.params.width = p.at("width").get<int>();
    manifest.params.rho_values = p.at("rho_values").get<std::vector<double>>();
    manifest.params.noise_sigma = p.at("noise_sigma").get<double>();
    for (const ordered_json& ji : j.at("items")) {
      ManifestItem item;
      item.path = ji.at("path").get<std::string>();
      const ordered_json& t = ji.at("target");
      if (!t.is_array() || t.size() != 3)
        throw std::runtime_error("target must have 3 entries");
      for (std::size_t i = 0; i < 3; ++i) item.target[i] = t[i].get<double>();
      item.rho = ji.at("rho").get<double>();
      manifest.items.push_back(std::move(item));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }

  if (manifest.items.empty()) throw ParseError(path + ": manifest has no items");
  if (manifest.params.rho_values.empty())
    throw ParseError(path + ": manifest has no rho values");
  for (const ManifestItem& item : manifest.items) {
    const std::string p = manifest_item_path(path, item);
    if (!std::filesystem::exists(p)) throw IoError("manifest references missing image " + p);
  }
  return manifest;
}

std::string manifest_item_path(const std::string& manifest_path, const ManifestItem& item) {
  const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
  return dir.empty() ? item.path : (dir / item.path).string();
}

}  // namespace snnlab
