#include <cmath>
#include <random>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/harmonize.hpp"
#include "test_support.hpp"

using namespace harmonizer;
using harmonizer::testing::random_binary_mask;
using harmonizer::testing::random_image;

TEST_CASE("zero model returns the composite") {
  const Image comp = random_image(40, 30, 1);
  const Mask mask = random_binary_mask(40, 30, 2);
  const FilterPipeline p = FilterPipeline::standard();
  for (RegressorMode mode : {RegressorMode::Cascade, RegressorMode::Multihead}) {
    const HarmonizeResult r = harmonize(comp, mask, RegressorModel::zeros(mode, 6), p);
    CHECK(r.image == comp);
    CHECK(r.theta == ArgVector(6));
  }
}

TEST_CASE("background pixels are untouched") {
  const Image comp = random_image(24, 24, 3);
  const Mask mask = random_binary_mask(24, 24, 4);
  const FilterPipeline p = FilterPipeline::standard();
  const Image out = apply_arguments(comp, mask, p, ArgVector{0.4, -0.3, 0.5, 0.2, -0.2, 0.3});
  std::size_t changed = 0;
  for (std::size_t i = 0; i < comp.pixel_count(); ++i) {
    if (mask[i] == 0.0) {
      CHECK(out.pixel(i) == comp.pixel(i));
    } else if (out.pixel(i) != comp.pixel(i)) {
      ++changed;
    }
  }
  CHECK(changed > 0);
}

TEST_CASE("prediction is clamped and shape checked") {
  const RegressorModel m = RegressorModel::initialized(RegressorMode::Cascade, 6, 5);
  const ArgVector theta = predict_arguments(random_image(50, 20, 6), random_binary_mask(50, 20, 7), m);
  CHECK(theta.size() == 6);
  for (double t : theta.values()) CHECK(std::abs(t) <= 1.0);
  CHECK_THROWS_AS(predict_arguments(random_image(8, 8, 1), Mask(9, 8), m), DomainError);
  CHECK_THROWS_AS(predict_arguments(random_image(8, 8, 1), Mask(8, 8), m), DomainError);
  CHECK_THROWS_AS(apply_arguments(random_image(8, 8, 1), random_binary_mask(8, 8, 1), FilterPipeline::standard(),
                                  ArgVector(5)),
                  DomainError);
}

TEST_CASE("ema worked examples") {
  EmaState s{std::nullopt, 0.9};
  s = ema_update(s, ArgVector{0.0});
  CHECK(s.smoothed->values()[0] == 0.0);
  s = ema_update(s, ArgVector{1.0});
  CHECK(s.smoothed->values()[0] == doctest::Approx(0.9));

  EmaState c{std::nullopt, 0.3};
  for (int i = 0; i < 50; ++i) {
    c = ema_update(c, ArgVector{0.123456789, -0.7});
    CHECK(*c.smoothed == ArgVector{0.123456789, -0.7});
  }

  EmaState raw{std::nullopt, 1.0};
  for (double v : {0.1, -0.5, 0.9}) {
    raw = ema_update(raw, ArgVector{v});
    CHECK(raw.smoothed->values()[0] == v);
  }

  CHECK_THROWS_AS(ema_update(EmaState{std::nullopt, 0.0}, ArgVector{0.0}), DomainError);
  CHECK_THROWS_AS(ema_update(EmaState{std::nullopt, 1.5}, ArgVector{0.0}), DomainError);
  CHECK_THROWS_AS(ema_update(s, ArgVector{0.0, 0.0}), DomainError);
}

TEST_CASE("ema output stays between the previous value and the input") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> a(0.01, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const EmaState s{ArgVector{u(rng)}, a(rng)};
    const double prev = s.smoothed->values()[0];
    const double x = u(rng);
    const double y = ema_update(s, ArgVector{x}).smoothed->values()[0];
    CHECK(y >= std::min(prev, x));
    CHECK(y <= std::max(prev, x));
  }
}

TEST_CASE("ema reduces the variance of a jittery stream") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 0.1);
  EmaState s{std::nullopt, 0.5};
  double raw_ss = 0.0;
  double smooth_ss = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = 0.2 + n(rng);
    s = ema_update(s, ArgVector{x});
    raw_ss += (x - 0.2) * (x - 0.2);
    smooth_ss += (s.smoothed->values()[0] - 0.2) * (s.smoothed->values()[0] - 0.2);
  }
  CHECK(smooth_ss / raw_ss < 0.5);
}

TEST_CASE("video harmonizer smooths predictions frame to frame") {
  const RegressorModel m = RegressorModel::initialized(RegressorMode::Multihead, 6, 13);
  const FilterPipeline p = FilterPipeline::standard();
  VideoHarmonizer video(m, p, 0.5);
  const Mask mask = random_binary_mask(32, 32, 14);
  const Image still = random_image(32, 32, 15);

  const VideoFrameResult first = video.process(still, mask);
  CHECK(first.smoothed == first.theta);
  const VideoFrameResult second = video.process(random_image(32, 32, 16), mask);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(second.smoothed.values()[i] ==
          doctest::Approx(0.5 * first.theta.values()[i] + 0.5 * second.theta.values()[i]));
  }
  CHECK(second.image == apply_arguments(random_image(32, 32, 16), mask, p, second.smoothed));

  VideoHarmonizer steady(m, p);
  const Image out0 = steady.process(still, mask).image;
  for (int i = 0; i < 5; ++i) CHECK(steady.process(still, mask).image == out0);
}
