#include "harmonizer/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "harmonizer/error.hpp"
#include "harmonizer/filters.hpp"

namespace harmonizer {

namespace {

// Two-pass weighted moments and histogram for one region.
template <class Weight>
bool region_stats(const Image& image, Weight weight, double* out) {
  const std::size_t n = image.pixel_count();
  auto data = image.data();
  double total = 0.0;
  std::array<double, 3> mean{};
  for (std::size_t p = 0; p < n; ++p) {
    const double w = weight(p);
    total += w;
    for (int c = 0; c < 3; ++c) mean[c] += w * data[3 * p + c];
  }
  if (!(total > 0.0)) return false;
  for (double& m : mean) m /= total;

  std::array<double, 3> var{};
  std::array<double, kHistogramBins> hist{};
  for (std::size_t p = 0; p < n; ++p) {
    const double w = weight(p);
    if (w == 0.0) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = data[3 * p + c] - mean[c];
      var[c] += w * d * d;
    }
    const double lum = luminance(data[3 * p], data[3 * p + 1], data[3 * p + 2]);
    const int bin = std::clamp(static_cast<int>(lum * kHistogramBins), 0, kHistogramBins - 1);
    hist[static_cast<std::size_t>(bin)] += w;
  }
  for (int c = 0; c < 3; ++c) {
    out[c] = mean[c];
    out[3 + c] = std::sqrt(var[c] / total);
  }
  for (int b = 0; b < kHistogramBins; ++b) out[6 + b] = hist[static_cast<std::size_t>(b)] / total;
  return true;
}

}  // namespace

FeatureVector extract_features(const Image& composite, const Mask& mask) {
  if (!mask.matches(composite)) throw DomainError("mask dimensions do not match the composite");
  FeatureVector z;
  z.values.assign(kFeatureDim, 0.0);
  double* fg = z.values.data();
  double* bg = fg + kRegionFeatureDim;
  if (!region_stats(composite, [&](std::size_t p) { return mask[p]; }, fg)) {
    throw DomainError("cannot extract features: mask has an empty foreground");
  }
  if (!region_stats(composite, [&](std::size_t p) { return 1.0 - mask[p]; }, bg)) {
    std::copy(fg, fg + kRegionFeatureDim, bg);
  }
  return z;
}

FeatureVector prediction_features(const Image& composite, const Mask& mask) {
  if (!mask.matches(composite)) throw DomainError("mask dimensions do not match the composite");
  if (composite.empty()) throw DomainError("cannot extract features from an empty image");
  const Mask small_mask = resize_bilinear(mask, kFeatureResolution, kFeatureResolution);
  if (!(small_mask.sum() > 0.0)) return extract_features(composite, mask);
  return extract_features(resize_bilinear(composite, kFeatureResolution, kFeatureResolution), small_mask);
}

}  // namespace harmonizer
