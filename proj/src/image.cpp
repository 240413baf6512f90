#include "harmonizer/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

void check_dims(int width, int height) {
  if (width < 0 || height < 0) {
    throw DomainError("negative raster dimensions " + std::to_string(width) + "x" + std::to_string(height));
  }
}

struct Tap {
  int lo;
  int hi;
  double frac;
};

// Half-pixel-center source taps for one output axis.
std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
  }
  return taps;
}

template <int Channels>
std::vector<double> resample(std::span<const double> src, int sw, int sh, int dw, int dh) {
  const auto xs = bilinear_taps(sw, dw);
  const auto ys = bilinear_taps(sh, dh);
  std::vector<double> out(static_cast<std::size_t>(dw) * dh * Channels);
  for (int y = 0; y < dh; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    const double* r0 = src.data() + static_cast<std::size_t>(ty.lo) * sw * Channels;
    const double* r1 = src.data() + static_cast<std::size_t>(ty.hi) * sw * Channels;
    double* dst = out.data() + static_cast<std::size_t>(y) * dw * Channels;
    for (int x = 0; x < dw; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < Channels; ++c) {
        const double a = r0[tx.lo * Channels + c] + tx.frac * (r0[tx.hi * Channels + c] - r0[tx.lo * Channels + c]);
        const double b = r1[tx.lo * Channels + c] + tx.frac * (r1[tx.hi * Channels + c] - r1[tx.lo * Channels + c]);
        dst[x * Channels + c] = a + ty.frac * (b - a);
      }
    }
  }
  return out;
}

template <int Channels>
std::vector<double> upsample(std::span<const double> src, int sw, int sh, int factor) {
  const int dw = sw * factor;
  std::vector<double> out(static_cast<std::size_t>(dw) * sh * factor * Channels);
  for (int y = 0; y < sh * factor; ++y) {
    const double* srow = src.data() + static_cast<std::size_t>(y / factor) * sw * Channels;
    double* drow = out.data() + static_cast<std::size_t>(y) * dw * Channels;
    for (int x = 0; x < dw; ++x) {
      for (int c = 0; c < Channels; ++c) drow[x * Channels + c] = srow[(x / factor) * Channels + c];
    }
  }
  return out;
}

}  // namespace

RgbRaster::RgbRaster(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

RgbRaster::RgbRaster(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DomainError("raster data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(width) + "x" + std::to_string(height) + "x3");
  }
}

void Image::validate() const {
  for (double v : data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image component outside [0,1]: " + std::to_string(v));
  }
}

Mask::Mask(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Mask::Mask(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw DomainError("mask data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
}

double Mask::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void Mask::validate() const {
  bool any = false;
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("mask value outside [0,1]: " + std::to_string(v));
    any = any || v > 0.0;
  }
  if (!any) throw DomainError("mask has an empty foreground");
}

Image resize_bilinear(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0 || image.empty()) throw DomainError("bilinear resize needs nonempty dimensions");
  return Image(width, height, resample<3>(image.data(), image.width(), image.height(), width, height));
}

Mask resize_bilinear(const Mask& mask, int width, int height) {
  if (width <= 0 || height <= 0 || mask.pixel_count() == 0) {
    throw DomainError("bilinear resize needs nonempty dimensions");
  }
  return Mask(width, height, resample<1>(mask.data(), mask.width(), mask.height(), width, height));
}

Image upsample_nearest(const Image& image, int factor) {
  if (factor < 1) throw DomainError("upsampling factor must be >= 1");
  return Image(image.width() * factor, image.height() * factor,
               upsample<3>(image.data(), image.width(), image.height(), factor));
}

Mask upsample_nearest(const Mask& mask, int factor) {
  if (factor < 1) throw DomainError("upsampling factor must be >= 1");
  return Mask(mask.width() * factor, mask.height() * factor,
              upsample<1>(mask.data(), mask.width(), mask.height(), factor));
}

Image downsample_nearest(const Image& image, int factor) {
  if (factor < 1 || image.width() % factor != 0 || image.height() % factor != 0) {
    throw DomainError("downsampling factor must divide the image dimensions");
  }
  Image out(image.width() / factor, image.height() / factor);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x * factor, y * factor, c);
    }
  }
  return out;
}

}  // namespace harmonizer
