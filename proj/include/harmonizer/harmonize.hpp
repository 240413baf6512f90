#pragma once

#include <optional>

#include "harmonizer/image.hpp"
#include "harmonizer/pipeline.hpp"
#include "harmonizer/regressor.hpp"

namespace harmonizer {

struct HarmonizeResult {
  Image image;
  ArgVector theta;
};

/// Predicts filter arguments from 256x256 features of (composite, mask).
ArgVector predict_arguments(const Image& composite, const Mask& mask, const RegressorModel& model);

/// Runs the pipeline with `theta` on the full-resolution composite and
/// blends the result back through the mask. Background pixels are untouched.
Image apply_arguments(const Image& composite, const Mask& mask, const FilterPipeline& pipeline, const ArgVector& theta);

/// predict_arguments followed by apply_arguments.
HarmonizeResult harmonize(const Image& composite, const Mask& mask, const RegressorModel& model,
                          const FilterPipeline& pipeline);

inline constexpr double kDefaultEmaAlpha = 0.9;

/// Exponential moving average over per-frame argument vectors. `alpha` is the
/// weight of the newest frame.
struct EmaState {
  std::optional<ArgVector> smoothed;
  double alpha = kDefaultEmaAlpha;
};

/// smoothed = (1 - alpha) * smoothed + alpha * theta; the first call copies theta.
/// Throws DomainError on a length mismatch or alpha outside (0,1].
EmaState ema_update(const EmaState& state, const ArgVector& theta);

struct VideoFrameResult {
  Image image;
  ArgVector theta;
  ArgVector smoothed;
};

/// Frame-by-frame harmonizer with EMA-smoothed arguments.
class VideoHarmonizer {
 public:
  VideoHarmonizer(const RegressorModel& model, const FilterPipeline& pipeline, double alpha = kDefaultEmaAlpha);

  VideoFrameResult process(const Image& frame, const Mask& mask);
  const EmaState& state() const noexcept { return state_; }

 private:
  const RegressorModel& model_;
  const FilterPipeline& pipeline_;
  EmaState state_;
};

}  // namespace harmonizer
