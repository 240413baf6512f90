#include <cmath>
#include <numbers>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/filters.hpp"
#include "test_support.hpp"

using namespace harmonizer;
using harmonizer::testing::random_image;
using harmonizer::testing::uniform_image;

TEST_CASE("luminance uses Rec.601 weights") {
  CHECK(luminance(1.0, 1.0, 1.0) == 1.0);
  CHECK(luminance(0.0, 0.0, 0.0) == 0.0);
  CHECK(luminance(1.0, 0.0, 0.0) == doctest::Approx(0.299).epsilon(1e-15));
  CHECK(luminance(0.0, 1.0, 0.0) == doctest::Approx(0.587).epsilon(1e-15));
  CHECK(luminance(0.0, 0.0, 1.0) == doctest::Approx(0.114).epsilon(1e-15));
}

TEST_CASE("filter names round-trip") {
  for (FilterKind kind : kAllFilterKinds) CHECK(parse_filter_kind(to_string(kind)) == kind);
  CHECK_FALSE(parse_filter_kind("vibrance").has_value());
}

TEST_CASE("apply_filter closed-form examples") {
  SUBCASE("brightness doubles at +1") {
    const Image out = apply_filter(uniform_image(1, 1, 0.25, 0.25, 0.25), FilterKind::Brightness, 1.0);
    CHECK(out.at(0, 0, 0) == 0.5);
    CHECK(out.at(0, 0, 2) == 0.5);
  }
  SUBCASE("brightness clamps") {
    const Image out = apply_filter(uniform_image(1, 1, 0.8, 0.8, 0.8), FilterKind::Brightness, 1.0);
    CHECK(out.at(0, 0, 1) == 1.0);
  }
  SUBCASE("saturation leaves gray alone") {
    for (double g : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      for (double arg : {-1.0, -0.4, 0.3, 1.0}) {
        const Image out = apply_filter(uniform_image(1, 1, g, g, g), FilterKind::Saturation, arg);
        CHECK(out.pixel(0) == Rgb{g, g, g});
      }
    }
  }
  SUBCASE("contrast pivots at 0.5") {
    const Image out = apply_filter(uniform_image(1, 1, 0.25, 0.5, 0.75), FilterKind::Contrast, 0.5);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.125));
    CHECK(out.at(0, 0, 1) == 0.5);
    CHECK(out.at(0, 0, 2) == doctest::Approx(0.875));
  }
  SUBCASE("temperature shifts red against blue") {
    const Image out = apply_filter(uniform_image(1, 1, 0.4, 0.4, 0.4), FilterKind::Temperature, 0.4);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.5));
    CHECK(out.at(0, 0, 1) == 0.4);
    CHECK(out.at(0, 0, 2) == doctest::Approx(0.3));
  }
  SUBCASE("shadow is not undone by the negated argument") {
    const Image once = apply_filter(uniform_image(1, 1, 0.8, 0.8, 0.8), FilterKind::Shadow, -0.7);
    CHECK(once.at(0, 0, 0) == doctest::Approx(0.66));
    const Image twice = apply_filter(once, FilterKind::Shadow, 0.7);
    CHECK(twice.at(0, 0, 0) == doctest::Approx(0.898));
    CHECK(std::abs(twice.at(0, 0, 0) - 0.8) > 0.01);
  }
  SUBCASE("highlight scales with luminance") {
    const Image out = apply_filter(uniform_image(1, 1, 0.2, 0.4, 0.6), FilterKind::Highlight, 0.5);
    const double lum = 0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.6;
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.2 + 0.5 * lum));
    CHECK(out.at(0, 0, 2) == doctest::Approx(0.6 + 0.5 * lum));
  }
}

TEST_CASE("zero argument is the exact identity and outputs stay in range") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image img = random_image(9, 7, seed);
    for (FilterKind kind : kAllFilterKinds) {
      CHECK(apply_filter(img, kind, 0.0) == img);
      for (double arg : {-1.0, -0.37, 0.61, 1.0}) {
        CHECK_NOTHROW(apply_filter(img, kind, arg).validate());
      }
    }
  }
}

TEST_CASE("out-of-range arguments are rejected") {
  const Image img = random_image(2, 2, 1);
  CHECK_THROWS_AS(apply_filter(img, FilterKind::Contrast, 1.0001), DomainError);
  CHECK_THROWS_AS(filter_arg_grad(img, FilterKind::Contrast, -1.5), DomainError);
  CHECK_THROWS_AS(apply_filter(img, FilterKind::Contrast, std::nan("")), DomainError);
}

TEST_CASE("argument gradient examples") {
  const Gradient g = filter_arg_grad(uniform_image(1, 1, 0.25, 0.25, 0.25), FilterKind::Brightness, 0.0);
  CHECK(g.at(0, 0, 0) == doctest::Approx(std::numbers::ln2 * 0.25));
  CHECK(g.at(0, 0, 0) == doctest::Approx(0.1733).epsilon(1e-3));

  for (double arg : {-0.8, 0.0, 0.6}) {
    CHECK(filter_arg_grad(uniform_image(1, 1, 0.5, 0.5, 0.5), FilterKind::Contrast, arg).at(0, 0, 1) == 0.0);
  }
  // 0.9 * 2^0.5 > 1: clamped component carries no gradient.
  const Gradient clamped = filter_arg_grad(uniform_image(1, 1, 0.9, 0.3, 0.3), FilterKind::Brightness, 0.5);
  CHECK(clamped.at(0, 0, 0) == 0.0);
  CHECK(clamped.at(0, 0, 1) != 0.0);
}

// Central differences of apply_filter, independent of the analytic kernels.
TEST_CASE("argument gradients match finite differences") {
  const Image img = random_image(6, 5, 42, 0.2, 0.8);
  const double h = 1e-6;
  for (FilterKind kind : kAllFilterKinds) {
    for (double arg : {-0.3, 0.0, 0.25}) {
      const Gradient g = filter_arg_grad(img, kind, arg);
      const Image plus = apply_filter(img, kind, arg + h);
      const Image minus = apply_filter(img, kind, arg - h);
      for (std::size_t i = 0; i < img.data().size(); ++i) {
        const double fd = (plus.data()[i] - minus.data()[i]) / (2 * h);
        CHECK(g.data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("input jvp matches finite differences of a random projection") {
  const Image img = random_image(5, 4, 3, 0.2, 0.8);
  const Image upstream_src = random_image(5, 4, 4, -1.0, 1.0);
  const Gradient upstream(upstream_src.width(), upstream_src.height(),
                          std::vector<double>(upstream_src.data().begin(), upstream_src.data().end()));
  const double h = 1e-6;
  for (FilterKind kind : kAllFilterKinds) {
    for (double arg : {-0.4, 0.35}) {
      const Gradient jvp = filter_input_jvp(img, kind, arg, upstream);
      for (std::size_t i = 0; i < img.data().size(); ++i) {
        Image plus = img;
        Image minus = img;
        plus.data()[i] += h;
        minus.data()[i] -= h;
        const Image fp = apply_filter(plus, kind, arg);
        const Image fm = apply_filter(minus, kind, arg);
        double fd = 0.0;
        for (std::size_t j = 0; j < img.data().size(); ++j) {
          fd += upstream.data()[j] * (fp.data()[j] - fm.data()[j]) / (2 * h);
        }
        CHECK(jvp.data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("input jvp special cases") {
  const Image img = random_image(4, 4, 5, 0.1, 0.45);
  const Image up_img = random_image(4, 4, 6, -1.0, 1.0);
  const Gradient up(4, 4, std::vector<double>(up_img.data().begin(), up_img.data().end()));
  for (FilterKind kind : kAllFilterKinds) CHECK(filter_input_jvp(img, kind, 0.0, up) == up);
  CHECK(filter_input_jvp(img, FilterKind::Temperature, 0.3, up) == up);

  const Gradient doubled = filter_input_jvp(img, FilterKind::Brightness, 1.0, up);
  for (std::size_t i = 0; i < up.data().size(); ++i) CHECK(doubled.data()[i] == 2.0 * up.data()[i]);

  CHECK_THROWS_AS(filter_input_jvp(img, FilterKind::Shadow, 0.1, Gradient(3, 4)), DomainError);
}
