#pragma once

#include <vector>

#include "harmonizer/image.hpp"
#include "harmonizer/pipeline.hpp"

namespace harmonizer {

struct FitTracePoint {
  int step = 0;
  double fmse = 0.0;  ///< final-stage masked MSE on the 0-255 squared scale
};

struct FitResult {
  ArgVector args;
  double fmse = 0.0;
  std::vector<FitTracePoint> trace;
};

struct GradientFitOptions {
  int steps = 500;
  /// Adam step size in argument units.
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-12;
};

/// Adam descent on the arguments from theta = 0, minimizing the
/// final-stage masked MSE against `target`; arguments are clamped to [-1,1]
/// after every step. trace holds the fMSE before each step and after the last.
/// Throws OptimizationError on a non-finite loss.
FitResult fit_gradient(const Image& composite, const Mask& mask, const Image& target, const FilterPipeline& pipeline,
                       const GradientFitOptions& options = {});

inline constexpr int kGoldenSectionIterations = 24;

/// Cyclic golden-section search over [-1,1] per argument, `rounds` full cycles.
/// A coordinate only moves when the objective does not increase; trace holds
/// the fMSE at the start and after each round. Throws DomainError if rounds < 1.
FitResult fit_coordinate(const Image& composite, const Mask& mask, const Image& target, const FilterPipeline& pipeline,
                         int rounds);

}  // namespace harmonizer
