#pragma once

#include <span>
#include <string>
#include <vector>

#include "harmonizer/image.hpp"

namespace harmonizer {

/// Metrics on the 0-255 squared scale.
struct EvalRecord {
  std::string id;
  double mse = 0.0;
  double fmse = 0.0;
  double psnr = 0.0;  ///< dB
};

inline constexpr double kPsnrCap = 99.0;

/// Mean over all components of (255 (a - b))^2.
double mse(const Image& a, const Image& b);
/// Mask-weighted squared 0-255 error normalized by 3 * sum(mask).
double fmse(const Image& a, const Image& b, const Mask& mask);
/// 10 log10(255^2 / mse), capped at 99 dB.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse_value);

EvalRecord evaluate(const Image& output, const Image& ground_truth, const Mask& mask, std::string id = {});

/// Arithmetic mean of each field; id is "mean".
EvalRecord mean_record(std::span<const EvalRecord> records);

}  // namespace harmonizer
