#pragma once

#include <span>
#include <vector>

#include "harmonizer/image.hpp"
#include "harmonizer/pipeline.hpp"

namespace harmonizer {

inline constexpr double kDefaultLossScale = 10.0;
inline constexpr double kDenominatorFloor = 1e-8;

/// Stage losses, their reweighted form and the scaled total of one sample
/// (or the mean over a batch).
struct LossReport {
  std::vector<double> stage;       ///< L_0 .. L_k
  std::vector<double> reweighted;  ///< one per filter stage 1..k
  double mu = kDefaultLossScale;
  double total = 0.0;

  double final_stage() const { return stage.back(); }
};

/// Mask-weighted mean squared error on the 0-1 scale, normalized by 3 * sum(mask).
double masked_mse(const Image& a, const Image& b, const Mask& mask);

/// d masked_mse / d a, multiplied by `scale`.
Gradient masked_mse_gradient(const Image& a, const Image& b, const Mask& mask, double scale);

/// L_i = masked_mse(trace.stages[i], targets[i]) for i = 0..k.
std::vector<double> stage_losses(const StageTrace& trace, std::span<const Image> targets, const Mask& mask);

/// max((L_i - L_{i-1}) / max(L_k, 1e-8), 0) for i = 1..k.
/// Throws DomainError on a negative or non-finite loss.
std::vector<double> dynamic_reweight(std::span<const double> losses);

/// mu * sum(reweighted).
double total_loss(std::span<const double> reweighted, double mu = kDefaultLossScale);

}  // namespace harmonizer
