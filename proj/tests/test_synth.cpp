#include <cmath>
#include <numbers>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/metrics.hpp"
#include "harmonizer/synth.hpp"
#include "test_support.hpp"

using namespace harmonizer;
using harmonizer::testing::random_image;
using harmonizer::testing::uniform_image;

namespace {

// Mean of N(m, s^2) truncated to [-1, 1].
double truncated_normal_mean(double m, double s) {
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double a = (-1.0 - m) / s;
  const double b = (1.0 - m) / s;
  return m + s * (pdf(a) - pdf(b)) / (cdf(b) - cdf(a));
}

}  // namespace

TEST_CASE("sample_args") {
  SUBCASE("degenerate prior returns its mean") {
    const std::vector<GaussianPrior> priors{{0.37, 1e-9}, {-0.5, 1e-9}};
    const ArgVector xi = sample_args(priors, 3);
    CHECK(std::abs(xi[0] - 0.37) < 1e-6);
    CHECK(std::abs(xi[1] + 0.5) < 1e-6);
  }
  SUBCASE("same seed, same draw") {
    const auto priors = FilterPipeline::standard().priors;
    CHECK(sample_args(priors, 99) == sample_args(priors, 99));
    CHECK_FALSE(sample_args(priors, 99) == sample_args(priors, 100));
  }
  SUBCASE("rejection keeps draws in range and matches the truncated mean") {
    const std::vector<GaussianPrior> wide{{0.6, 0.8}};
    const int n = 100000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_args(wide, static_cast<std::uint64_t>(i))[0];
      REQUIRE(v >= -1.0);
      REQUIRE(v <= 1.0);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - truncated_normal_mean(0.6, 0.8)) < 3.0 * se);
  }
}

TEST_CASE("generate_composite") {
  const Image natural = random_image(16, 16, 1, 0.1, 0.7);
  const Mask mask = harmonizer::testing::random_binary_mask(16, 16, 2);
  const FilterPipeline p = FilterPipeline::standard();

  SUBCASE("zero xi leaves everything untouched") {
    const CompositeSample s = generate_composite(natural, mask, p, ArgVector(6));
    CHECK(s.composite == natural);
    for (const Image& t : s.stage_targets) CHECK(t == natural);
    CHECK(clipping_guard(s));
    CHECK(s.clipped_fraction == 0.0);
  }
  SUBCASE("stage chain runs the filters in reverse") {
    const ArgVector xi{0.1, -0.2, 0.3, -0.1, 0.2, -0.15};
    const CompositeSample s = generate_composite(natural, mask, p, xi);
    REQUIRE(s.stage_targets.size() == 7);
    CHECK(s.stage_targets[6] == natural);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(s.stage_targets[i] == apply_filter(s.stage_targets[i + 1], p.filters[i], xi[i]));
    }
    for (std::size_t px = 0; px < mask.pixel_count(); ++px) {
      if (mask[px] == 0.0) CHECK(s.composite.pixel(px) == natural.pixel(px));
      if (mask[px] == 1.0) CHECK(s.composite.pixel(px) == s.stage_targets[0].pixel(px));
    }
  }
  SUBCASE("brightness composite is inverted by the negated argument") {
    const FilterPipeline b = FilterPipeline::of({FilterKind::Brightness});
    const Image dim = random_image(8, 8, 4, 0.01, 0.79);
    const Mask full(8, 8, 1.0);
    const CompositeSample s = generate_composite(dim, full, b, ArgVector{0.3});
    CHECK(s.clipped_fraction == 0.0);
    for (std::size_t i = 0; i < dim.data().size(); ++i) {
      CHECK(s.composite.data()[i] == doctest::Approx(dim.data()[i] * std::exp2(0.3)).epsilon(1e-14));
    }
    const Image back = apply_filter(s.composite, FilterKind::Brightness, -0.3);
    for (std::size_t i = 0; i < dim.data().size(); ++i) CHECK(back.data()[i] == doctest::Approx(dim.data()[i]).epsilon(1e-14));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(generate_composite(natural, Mask(8, 8, 1.0), p, ArgVector(6)), DomainError);
    CHECK_THROWS_AS(generate_composite(natural, mask, p, ArgVector(3)), DomainError);
  }
}

TEST_CASE("background preservation over random procedural samples") {
  const FilterPipeline p = FilterPipeline::standard();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SceneSample scene = procedural_scene(64, 64, seed);
    const CompositeSample s = generate_composite(scene.image, scene.mask, p, sample_args(p.priors, seed));
    for (std::size_t px = 0; px < scene.mask.pixel_count(); ++px) {
      if (scene.mask[px] == 0.0) REQUIRE(s.composite.pixel(px) == scene.image.pixel(px));
    }
    CHECK(s.stage_targets.back() == scene.image);
  }
}

TEST_CASE("clipping guard") {
  const FilterPipeline b = FilterPipeline::of({FilterKind::Brightness});
  const Image white = uniform_image(8, 8, 1.0, 1.0, 1.0);
  const CompositeSample s = generate_composite(white, Mask(8, 8, 1.0), b, ArgVector{1.0});
  CHECK(s.clipped_fraction == 1.0);
  CHECK_FALSE(clipping_guard(s));
  CHECK(clipping_guard(s, 1.0));
}

TEST_CASE("reverse-then-forward consistency for invertible filters") {
  const FilterPipeline p = FilterPipeline::of(
      {FilterKind::Brightness, FilterKind::Contrast, FilterKind::Saturation, FilterKind::Temperature});
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneSample scene = procedural_scene(32, 32, seed);
    const ArgVector xi = sample_args(p.priors, seed + 500);
    const CompositeSample s = generate_composite(scene.image, scene.mask, p, xi);
    if (s.clipped_fraction > 0.0) continue;
    ++checked;
    // Exact inverses, applied in forward order.
    const ArgVector inverse{-xi[0], -xi[1] / (1.0 + xi[1]), -xi[2] / (1.0 + xi[2]), -xi[3]};
    const Image recovered = run_pipeline(s.composite, p, inverse);
    CHECK(fmse(recovered, scene.image, scene.mask) / (255.0 * 255.0) < 1e-6);
  }
  CHECK(checked >= 10);
}

TEST_CASE("procedural scenes and corpora are deterministic") {
  const SceneSample a = procedural_scene(40, 30, 5);
  const SceneSample b = procedural_scene(40, 30, 5);
  CHECK(a.image == b.image);
  CHECK(a.mask == b.mask);
  CHECK_NOTHROW(a.image.validate());
  CHECK_NOTHROW(a.mask.validate());
  CHECK(a.mask.sum() < 0.5 * a.mask.pixel_count());

  const FilterPipeline p = FilterPipeline::standard();
  const auto c1 = synthesize_corpus(5, 16, 16, p, 10);
  const auto c2 = synthesize_corpus(5, 16, 16, p, 10);
  REQUIRE(c1.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(c1[i].composite == c2[i].composite);
    CHECK(c1[i].xi == c2[i].xi);
    CHECK(clipping_guard(c1[i]));
  }
}
