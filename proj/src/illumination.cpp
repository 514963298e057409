#include "scenesim/illumination.hpp"

#include <algorithm>
#include <cmath>

#include "scenesim/errors.hpp"
#include "scenesim/geometry.hpp"
#include "scenesim/io.hpp"

namespace scenesim {

void ImageGrid::validate() const {
  if (width < 3 || height < 3) throw Error(ErrorCode::kValidation, "image must be at least 3x3");
  if (luminance.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kValidation, "image luminance size does not match width x height");
  }
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

}  // namespace

void blur_and_sobel(const ImageGrid& img, double blur_sigma, std::vector<double>& gx,
                    std::vector<double>& gy) {
  img.validate();
  const int w = img.width, h = img.height;
  const auto kernel = gaussian_kernel(blur_sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c); };

  std::vector<double> tmp(img.luminance.size()), blurred(img.luminance.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(r, std::clamp(c + k, 0, w - 1));
      }
      tmp[idx(r, c)] = acc;
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[idx(std::clamp(r + k, 0, h - 1), c)];
      }
      blurred[idx(r, c)] = acc;
    }
  }

  gx.assign(blurred.size(), 0.0);
  gy.assign(blurred.size(), 0.0);
  auto b = [&](int r, int c) { return blurred[idx(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1))]; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      gx[idx(r, c)] = (b(r - 1, c + 1) + 2.0 * b(r, c + 1) + b(r + 1, c + 1)) -
                      (b(r - 1, c - 1) + 2.0 * b(r, c - 1) + b(r + 1, c - 1));
      gy[idx(r, c)] = (b(r + 1, c - 1) + 2.0 * b(r + 1, c) + b(r + 1, c + 1)) -
                      (b(r - 1, c - 1) + 2.0 * b(r - 1, c) + b(r - 1, c + 1));
    }
  }
}

LightEstimate estimate_light(const ImageGrid& img, double blur_sigma) {
  std::vector<double> gx, gy;
  blur_and_sobel(img, blur_sigma, gx, gy);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double mag = gx[i] * gx[i] + gy[i] * gy[i];
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  LightEstimate est;
  est.peak_row = static_cast<int>(best / static_cast<std::size_t>(img.width));
  est.peak_col = static_cast<int>(best % static_cast<std::size_t>(img.width));
  est.gx = gx[best];
  est.gy = gy[best];
  const double norm = std::sqrt(est.gx * est.gx + est.gy * est.gy + 1.0);
  est.direction = {est.gx / norm, est.gy / norm, -1.0 / norm};
  est.azimuth = std::atan2(est.gy, est.gx);
  return est;
}

int shadow_bucket(double light_azimuth, double vehicle_heading, int n_buckets) {
  if (n_buckets < 1) throw Error(ErrorCode::kValidation, "n_buckets must be >= 1");
  const double theta = wrap_two_pi(light_azimuth - vehicle_heading);
  const int bucket = static_cast<int>(std::floor(theta * n_buckets / (2.0 * M_PI)));
  return std::clamp(bucket, 0, n_buckets - 1);
}

ImageGrid load_image_pgm(const std::filesystem::path& path) {
  const io::GrayImage g = io::read_pgm(path);
  ImageGrid img;
  img.width = g.width;
  img.height = g.height;
  img.luminance.resize(g.pixels.size());
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    img.luminance[i] = static_cast<double>(g.pixels[i]) / static_cast<double>(g.maxval);
  }
  img.validate();
  return img;
}

}  // namespace scenesim
