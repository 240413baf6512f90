#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace harmonizer {

using Rgb = std::array<double, 3>;

/// Dense row-major RGB raster of doubles. Shared storage for images and
/// the gradient rasters that flow backwards through the filters.
class RgbRaster {
 public:
  RgbRaster() = default;
  RgbRaster(int width, int height, double fill = 0.0);
  RgbRaster(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(int y) noexcept {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(y) * width_ * 3, static_cast<std::size_t>(width_) * 3);
  }
  std::span<const double> row(int y) const noexcept {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(y) * width_ * 3,
                                                  static_cast<std::size_t>(width_) * 3);
  }

  double& at(int x, int y, int c) noexcept { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
  double at(int x, int y, int c) const noexcept { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

  Rgb pixel(std::size_t i) const noexcept { return {data_[3 * i], data_[3 * i + 1], data_[3 * i + 2]}; }
  void set_pixel(std::size_t i, const Rgb& v) noexcept {
    data_[3 * i] = v[0];
    data_[3 * i + 1] = v[1];
    data_[3 * i + 2] = v[2];
  }

  bool same_shape(const RgbRaster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const RgbRaster&, const RgbRaster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// RGB image with components in [0,1].
class Image : public RgbRaster {
 public:
  using RgbRaster::RgbRaster;

  /// Throws DomainError unless every component is finite and in [0,1].
  void validate() const;
};

/// Per-component gradient with the shape of an Image. Unbounded values.
class Gradient : public RgbRaster {
 public:
  using RgbRaster::RgbRaster;
};

/// Single-channel foreground weight map in [0,1].
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, double fill = 0.0);
  Mask(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double sum() const noexcept;
  bool matches(const RgbRaster& image) const noexcept {
    return width_ == image.width() && height_ == image.height();
  }

  /// Throws DomainError if any value leaves [0,1] or the foreground is empty.
  void validate() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Bilinear resampling with half-pixel centers and edge clamping.
Image resize_bilinear(const Image& image, int width, int height);
Mask resize_bilinear(const Mask& mask, int width, int height);

/// Integer-factor nearest-neighbor upsampling (every pixel becomes a factor x factor block).
Image upsample_nearest(const Image& image, int factor);
Mask upsample_nearest(const Mask& mask, int factor);

/// Inverse of upsample_nearest: keeps the top-left pixel of every block.
Image downsample_nearest(const Image& image, int factor);

}  // namespace harmonizer
