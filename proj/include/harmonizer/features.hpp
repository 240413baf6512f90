#pragma once

#include <cstddef>
#include <vector>

#include "harmonizer/image.hpp"

namespace harmonizer {

inline constexpr int kHistogramBins = 16;
/// Per region: 3 channel means, 3 channel stddevs, 16 luminance histogram bins.
inline constexpr std::size_t kRegionFeatureDim = 3 + 3 + kHistogramBins;
/// Foreground block followed by background block.
inline constexpr std::size_t kFeatureDim = 2 * kRegionFeatureDim;
/// Resolution the prediction path resamples to before extracting features.
inline constexpr int kFeatureResolution = 256;

/// Image-level statistics of a composite: foreground block then background block.
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

/// Mask-weighted region statistics. Foreground pixels weigh `mask`, background
/// pixels `1 - mask`; a full mask reuses the foreground block for the background.
/// Throws DomainError on an empty foreground or shape mismatch.
FeatureVector extract_features(const Image& composite, const Mask& mask);

/// Features as seen by the predictor: bilinear resampling of image and mask to
/// 256x256 first. Falls back to full resolution if resampling empties the mask.
FeatureVector prediction_features(const Image& composite, const Mask& mask);

}  // namespace harmonizer
