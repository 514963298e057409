#pragma once

#include <array>
#include <filesystem>
#include <vector>

namespace scenesim {

struct ImageGrid {
  int width{0};
  int height{0};
  std::vector<double> luminance;  // row-major, values in [0, 1]

  double at(int row, int col) const {
    return luminance[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(col)];
  }
  void validate() const;
};

struct LightEstimate {
  std::array<double, 3> direction{0.0, 0.0, -1.0};  // unit, z < 0
  double azimuth{0.0};                              // atan2(Gy, Gx)
  int peak_row{0};
  int peak_col{0};
  double gx{0.0};
  double gy{0.0};
};

inline constexpr double kDefaultBlurSigma = 2.0;
inline constexpr int kDefaultShadowBuckets = 8;

// Gaussian blur (radius ceil(3 sigma), clamped edges) followed by 3x3 Sobel.
// Gx grows with column index, Gy with row index.
void blur_and_sobel(const ImageGrid& img, double blur_sigma, std::vector<double>& gx,
                    std::vector<double>& gy);

// Light direction from the pixel of maximum gradient magnitude; ties go to
// the first pixel in row-major order.
LightEstimate estimate_light(const ImageGrid& img, double blur_sigma = kDefaultBlurSigma);

int shadow_bucket(double light_azimuth, double vehicle_heading, int n_buckets = kDefaultShadowBuckets);

// P2/P5 PGM scaled by maxval into [0, 1].
ImageGrid load_image_pgm(const std::filesystem::path& path);

}  // namespace scenesim
