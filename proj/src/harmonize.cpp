#include "harmonizer/harmonize.hpp"

#include <algorithm>
#include <string>

#include "harmonizer/error.hpp"
#include "harmonizer/features.hpp"

namespace harmonizer {

ArgVector predict_arguments(const Image& composite, const Mask& mask, const RegressorModel& model) {
  return predict(prediction_features(composite, mask), model);
}

Image apply_arguments(const Image& composite, const Mask& mask, const FilterPipeline& pipeline, const ArgVector& theta) {
  if (!mask.matches(composite)) throw DomainError("mask dimensions do not match the composite");
  return composite_output(composite, run_pipeline(composite, pipeline, theta), mask);
}

HarmonizeResult harmonize(const Image& composite, const Mask& mask, const RegressorModel& model,
                          const FilterPipeline& pipeline) {
  if (model.arg_count() != pipeline.size()) throw DomainError("model head count does not match the pipeline");
  ArgVector theta = predict_arguments(composite, mask, model);
  return {apply_arguments(composite, mask, pipeline, theta), std::move(theta)};
}

EmaState ema_update(const EmaState& state, const ArgVector& theta) {
  if (!(state.alpha > 0.0 && state.alpha <= 1.0)) {
    throw DomainError("EMA coefficient must be in (0,1], got " + std::to_string(state.alpha));
  }
  EmaState next{theta, state.alpha};
  if (!state.smoothed || state.alpha == 1.0) return next;
  const ArgVector& prev = *state.smoothed;
  if (prev.size() != theta.size()) throw DomainError("EMA argument length changed between frames");
  // prev + alpha * (theta - prev): a repeated input is a fixed point bit for bit.
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double v = prev[i] + state.alpha * (theta[i] - prev[i]);
    (*next.smoothed)[i] = std::clamp(v, std::min(prev[i], theta[i]), std::max(prev[i], theta[i]));
  }
  return next;
}

VideoHarmonizer::VideoHarmonizer(const RegressorModel& model, const FilterPipeline& pipeline, double alpha)
    : model_(model), pipeline_(pipeline), state_{std::nullopt, alpha} {
  if (model.arg_count() != pipeline.size()) throw DomainError("model head count does not match the pipeline");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("EMA coefficient must be in (0,1]");
}

VideoFrameResult VideoHarmonizer::process(const Image& frame, const Mask& mask) {
  ArgVector theta = predict_arguments(frame, mask, model_);
  state_ = ema_update(state_, theta);
  const ArgVector& smoothed = *state_.smoothed;
  return {apply_arguments(frame, mask, pipeline_, smoothed), std::move(theta), smoothed};
}

}  // namespace harmonizer
