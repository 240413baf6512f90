#include "harmonizer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Blob {
  double cx, cy, radius;
  Rgb color;
};

}  // namespace

ArgVector sample_args(std::span<const GaussianPrior> priors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> xi;
  xi.reserve(priors.size());
  for (const GaussianPrior& prior : priors) {
    if (!(prior.stddev > 0.0) || !(prior.mean >= -1.0 && prior.mean <= 1.0)) {
      throw DomainError("invalid Gaussian prior");
    }
    double v;
    do {
      v = prior.mean + prior.stddev * unit(rng);
    } while (!(v >= -1.0 && v <= 1.0));
    xi.push_back(v);
  }
  return ArgVector(std::move(xi));
}

CompositeSample generate_composite(const Image& natural, const Mask& mask, const FilterPipeline& pipeline,
                                   const ArgVector& xi) {
  pipeline.validate();
  if (!mask.matches(natural)) throw DomainError("mask dimensions do not match the natural image");
  if (xi.size() != pipeline.size()) throw DomainError("xi length does not match the pipeline");
  xi.validate();

  const std::size_t k = pipeline.size();
  CompositeSample sample;
  sample.natural = natural;
  sample.mask = mask;
  sample.xi = xi;
  sample.stage_targets.resize(k + 1);
  sample.stage_targets[k] = natural;

  std::vector<std::uint8_t> clamped(natural.data().size(), 0);
  Image current = natural;
  for (std::size_t i = k; i-- > 0;) {
    apply_filter_inplace(current.data(), pipeline.filters[i], xi[i], clamped);
    sample.stage_targets[i] = current;
  }
  sample.composite = composite_output(natural, sample.stage_targets[0], mask);

  double clipped = 0.0;
  double weight = 0.0;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask[p];
    weight += 3.0 * m;
    clipped += m * (clamped[3 * p] + clamped[3 * p + 1] + clamped[3 * p + 2]);
  }
  sample.clipped_fraction = weight > 0.0 ? clipped / weight : 0.0;
  return sample;
}

bool clipping_guard(const CompositeSample& sample, double threshold) {
  return !(sample.clipped_fraction > threshold);
}

SceneSample procedural_scene(int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw DomainError("scene dimensions must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  // Palette around a random base color; illumination tints everything alike.
  const Rgb base = {uniform(0.25, 0.75), uniform(0.25, 0.75), uniform(0.25, 0.75)};
  const Rgb tint = {uniform(0.9, 1.1), uniform(0.9, 1.1), uniform(0.9, 1.1)};
  const int blob_count = 3 + static_cast<int>(u01(rng) * 3.0);
  std::vector<Blob> blobs;
  for (int b = 0; b < blob_count; ++b) {
    Blob blob{uniform(-0.1, 1.1), uniform(-0.1, 1.1), uniform(0.15, 0.5), {}};
    for (int c = 0; c < 3; ++c) blob.color[c] = std::clamp(base[c] + uniform(-0.3, 0.3), 0.1, 0.9);
    blobs.push_back(blob);
  }
  const double grad_x = uniform(-0.15, 0.15);
  const double grad_y = uniform(-0.15, 0.15);
  const double noise_amp = uniform(0.005, 0.03);

  SceneSample scene{Image(width, height), Mask(width, height)};
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) / height;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) / width;
      Rgb acc = base;
      double wsum = 1.0;
      for (const Blob& blob : blobs) {
        const double d2 = ((fx - blob.cx) * (fx - blob.cx) + (fy - blob.cy) * (fy - blob.cy)) /
                          (blob.radius * blob.radius);
        const double w = 4.0 * std::exp(-d2);
        for (int c = 0; c < 3; ++c) acc[c] += w * blob.color[c];
        wsum += w;
      }
      const double shade = 1.0 + grad_x * (fx - 0.5) + grad_y * (fy - 0.5);
      for (int c = 0; c < 3; ++c) {
        const double v = acc[c] / wsum * shade * tint[c] + noise_amp * (2.0 * u01(rng) - 1.0);
        scene.image.at(x, y, c) = std::clamp(v, 0.03, 0.97);
      }
    }
  }

  // Hard elliptical foreground: a soft edge would mix perturbed and natural
  // pixels that no global filter can separate again.
  const double cx = uniform(0.35, 0.65) * width;
  const double cy = uniform(0.35, 0.65) * height;
  const double rx = uniform(0.15, 0.3) * width;
  const double ry = uniform(0.15, 0.3) * height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      scene.mask.at(x, y) = dx * dx + dy * dy <= 1.0 ? 1.0 : 0.0;
    }
  }
  if (scene.mask.sum() <= 0.0) scene.mask.at(static_cast<int>(cx), static_cast<int>(cy)) = 1.0;
  return scene;
}

std::vector<CompositeSample> synthesize_corpus(std::size_t count, int width, int height,
                                               const FilterPipeline& pipeline, std::uint64_t base_seed,
                                               double clip_threshold) {
  pipeline.validate();
  std::vector<CompositeSample> corpus;
  corpus.reserve(count);
  const std::uint64_t max_attempts = 100 * static_cast<std::uint64_t>(count) + 100;
  for (std::uint64_t seed = base_seed; corpus.size() < count; ++seed) {
    if (seed - base_seed >= max_attempts) {
      throw DomainError("clipping guard rejected too many samples; widen the threshold or narrow the priors");
    }
    const SceneSample scene = procedural_scene(width, height, seed);
    const ArgVector xi = sample_args(pipeline.priors, splitmix64(seed ^ 0x5eedULL));
    CompositeSample sample = generate_composite(scene.image, scene.mask, pipeline, xi);
    if (!clipping_guard(sample, clip_threshold)) continue;
    sample.seed = seed;
    corpus.push_back(std::move(sample));
  }
  return corpus;
}

}  // namespace harmonizer
