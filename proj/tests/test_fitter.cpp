#include <cmath>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/fitter.hpp"
#include "harmonizer/metrics.hpp"
#include "harmonizer/synth.hpp"
#include "test_support.hpp"

using namespace harmonizer;
using harmonizer::testing::random_binary_mask;
using harmonizer::testing::random_image;

namespace {

void check_non_increasing(const std::vector<FitTracePoint>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].fmse <= trace[i - 1].fmse);
}

}  // namespace

TEST_CASE("fitting a composite to itself stays at zero") {
  const Image comp = random_image(16, 16, 1);
  const Mask mask = random_binary_mask(16, 16, 2);
  const FilterPipeline p = FilterPipeline::standard();
  const FitResult g = fit_gradient(comp, mask, comp, p, {20});
  CHECK(g.args == ArgVector(6));
  CHECK(g.fmse == 0.0);
  const FitResult c = fit_coordinate(comp, mask, comp, p, 2);
  CHECK(c.args == ArgVector(6));
  CHECK(c.fmse == 0.0);
}

TEST_CASE("single brightness filter recovers the inverse argument") {
  const FilterPipeline p = FilterPipeline::of({FilterKind::Brightness}, GaussianPrior{});
  const Image natural = random_image(32, 32, 3, 0.1, 0.6);
  Mask mask(32, 32);
  for (double& v : mask.data()) v = 1.0;
  const CompositeSample s = generate_composite(natural, mask, p, ArgVector{0.3});

  const FitResult g = fit_gradient(s.composite, mask, natural, p, {500});
  CHECK(std::abs(g.args.values()[0] + 0.3) < 1e-3);
  const FitResult c = fit_coordinate(s.composite, mask, natural, p, 1);
  CHECK(std::abs(c.args.values()[0] + 0.3) < 1e-3);
  CHECK(g.trace.back().fmse < 1e-3 * g.trace.front().fmse);
  check_non_increasing(c.trace);
}

TEST_CASE("fitters reduce the error on a synthesized pair") {
  const FilterPipeline p = FilterPipeline::standard();
  const CompositeSample s = synthesize_corpus(1, 48, 48, p, 77).front();
  const double start = fmse(s.composite, s.natural, s.mask);
  const FitResult g = fit_gradient(s.composite, s.mask, s.natural, p, {300});
  const FitResult c = fit_coordinate(s.composite, s.mask, s.natural, p, 4);
  CHECK(g.fmse < start);
  CHECK(c.fmse < start);
  CHECK(c.trace.size() == 5);
  CHECK(c.trace.front().fmse == doctest::Approx(start));
  check_non_increasing(c.trace);
  for (double t : g.args.values()) CHECK(std::abs(t) <= 1.0);
  CHECK(c.fmse == doctest::Approx(fmse(apply_pipeline(s.composite, p, c.args).output(), s.natural, s.mask)));
}

TEST_CASE("fitter rejects bad arguments") {
  const Image comp = random_image(8, 8, 1);
  const Mask mask = random_binary_mask(8, 8, 2);
  const FilterPipeline p = FilterPipeline::standard();
  CHECK_THROWS_AS(fit_coordinate(comp, mask, comp, p, 0), DomainError);
  CHECK_THROWS_AS(fit_gradient(comp, Mask(8, 8), comp, p), DomainError);
  CHECK_THROWS_AS(fit_gradient(comp, mask, random_image(9, 8, 1), p), DomainError);
}
