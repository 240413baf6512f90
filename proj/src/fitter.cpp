#include "harmonizer/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "harmonizer/error.hpp"
#include "harmonizer/losses.hpp"

namespace harmonizer {

namespace {

void check_inputs(const Image& composite, const Mask& mask, const Image& target, const FilterPipeline& pipeline) {
  pipeline.validate();
  if (!composite.same_shape(target) || !mask.matches(composite)) {
    throw DomainError("fitter needs composite, mask and target of equal dimensions");
  }
  mask.validate();
}

constexpr double kByteScale2 = 255.0 * 255.0;

// Final-stage masked MSE on the 0-1 scale. The reported fMSE is the same
// quantity on the 0-255 scale.
struct Objective {
  const Image& composite;
  const Mask& mask;
  const Image& target;
  const FilterPipeline& pipeline;

  double loss(const ArgVector& theta) const {
    return masked_mse(run_pipeline(composite, pipeline, theta), target, mask);
  }
};

}  // namespace

FitResult fit_gradient(const Image& composite, const Mask& mask, const Image& target, const FilterPipeline& pipeline,
                       const GradientFitOptions& options) {
  check_inputs(composite, mask, target, pipeline);
  if (options.steps < 1) throw DomainError("fit_gradient needs at least one step");
  const Objective objective{composite, mask, target, pipeline};
  const std::size_t k = pipeline.size();

  FitResult result;
  ArgVector theta(k);
  std::vector<Gradient> upstream(k);
  // Adam moments. The filters differ in sensitivity by more than an order of
  // magnitude, so a single fixed step either crawls or diverges.
  std::vector<double> m(k, 0.0);
  std::vector<double> v(k, 0.0);
  double b1t = 1.0;
  double b2t = 1.0;
  for (int step = 0; step < options.steps; ++step) {
    const StageTrace trace = apply_pipeline(composite, pipeline, theta);
    const double loss = masked_mse(trace.output(), target, mask);
    if (!std::isfinite(loss)) throw OptimizationError("non-finite loss at step " + std::to_string(step));
    result.trace.push_back({step, kByteScale2 * loss});
    upstream[k - 1] = masked_mse_gradient(trace.output(), target, mask, 1.0);
    const std::vector<double> grad = pipeline_arg_gradients(trace, pipeline, upstream);
    b1t *= options.beta1;
    b2t *= options.beta2;
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(grad[i])) throw OptimizationError("non-finite gradient at step " + std::to_string(step));
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * grad[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / (1.0 - b1t);
      const double vhat = v[i] / (1.0 - b2t);
      theta[i] = std::clamp(theta[i] - options.learning_rate * mhat / (std::sqrt(vhat) + options.epsilon), -1.0, 1.0);
    }
  }
  result.fmse = kByteScale2 * objective.loss(theta);
  if (!std::isfinite(result.fmse)) throw OptimizationError("non-finite final fMSE");
  result.trace.push_back({options.steps, result.fmse});
  result.args = theta;
  return result;
}

FitResult fit_coordinate(const Image& composite, const Mask& mask, const Image& target, const FilterPipeline& pipeline,
                         int rounds) {
  if (rounds < 1) throw DomainError("fit_coordinate needs at least one round");
  check_inputs(composite, mask, target, pipeline);
  const Objective objective{composite, mask, target, pipeline};
  const std::size_t k = pipeline.size();
  const double inv_phi = 1.0 / std::numbers::phi;

  FitResult result;
  ArgVector theta(k);
  double best = objective.loss(theta);
  result.trace.push_back({0, kByteScale2 * best});
  for (int round = 1; round <= rounds; ++round) {
    for (std::size_t i = 0; i < k; ++i) {
      ArgVector probe = theta;
      auto eval = [&](double v) {
        probe[i] = v;
        return objective.loss(probe);
      };
      double lo = -1.0;
      double hi = 1.0;
      double x1 = hi - inv_phi * (hi - lo);
      double x2 = lo + inv_phi * (hi - lo);
      double f1 = eval(x1);
      double f2 = eval(x2);
      for (int it = 0; it < kGoldenSectionIterations; ++it) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = eval(x2);
        }
      }
      const double candidate = f1 <= f2 ? x1 : x2;
      const double value = std::min(f1, f2);
      if (value <= best) {
        theta[i] = candidate;
        best = value;
      }
    }
    result.trace.push_back({round, kByteScale2 * best});
  }
  result.args = theta;
  result.fmse = result.trace.back().fmse;
  return result;
}

}  // namespace harmonizer
