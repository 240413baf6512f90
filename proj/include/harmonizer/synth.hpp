#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "harmonizer/image.hpp"
#include "harmonizer/pipeline.hpp"

namespace harmonizer {

/// A supervised training sample synthesized from a natural image.
struct CompositeSample {
  Image natural;
  Mask mask;
  /// Input to the harmonizer: the perturbed foreground over the natural background.
  Image composite;
  /// I_0 .. I_k of the reverse synthesis chain; stage_targets.back() == natural.
  std::vector<Image> stage_targets;
  /// Synthesis arguments, one per filter.
  ArgVector xi;
  /// Mask-weighted fraction of foreground components clamped at any synthesis stage.
  double clipped_fraction = 0.0;
  /// Seed the sample was drawn with, when produced by synthesize_corpus.
  std::uint64_t seed = 0;
};

/// Draws one argument per prior from N(mean, stddev^2), redrawing until the
/// value falls in [-1,1].
ArgVector sample_args(std::span<const GaussianPrior> priors, std::uint64_t seed);

/// Runs the filters in reverse order on `natural`, then composites the
/// perturbed I_0 foreground onto the natural background.
CompositeSample generate_composite(const Image& natural, const Mask& mask, const FilterPipeline& pipeline,
                                   const ArgVector& xi);

inline constexpr double kDefaultClipThreshold = 0.05;

/// True (accept) unless more than `threshold` of the foreground was clamped.
bool clipping_guard(const CompositeSample& sample, double threshold = kDefaultClipThreshold);

/// A procedurally generated natural image with an elliptical foreground.
struct SceneSample {
  Image image;
  Mask mask;
};

/// Smooth multi-color scene whose foreground and background share one palette
/// and illumination, so foreground statistics are predictable from the background.
SceneSample procedural_scene(int width, int height, std::uint64_t seed);

/// Synthesizes `count` samples from procedural scenes with seeds base_seed + i,
/// drawing xi from the pipeline priors. Samples failing the clipping guard are
/// redrawn with the next unused seed.
std::vector<CompositeSample> synthesize_corpus(std::size_t count, int width, int height,
                                               const FilterPipeline& pipeline, std::uint64_t base_seed,
                                               double clip_threshold = kDefaultClipThreshold);

}  // namespace harmonizer
