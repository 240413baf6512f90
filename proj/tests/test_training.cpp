#include <cmath>
#include <limits>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/training.hpp"

using namespace harmonizer;

namespace {

const FilterPipeline& two_filters() {
  static const FilterPipeline p =
      FilterPipeline::of({FilterKind::Brightness, FilterKind::Saturation}, GaussianPrior{0.0, 0.25});
  return p;
}

std::vector<TrainingExample> small_batch(const FilterPipeline& p, std::size_t n, int size, std::uint64_t seed) {
  return make_training_examples(synthesize_corpus(n, size, size, p, seed));
}

RegressorModel lively_model(RegressorMode mode, std::size_t k, std::uint64_t seed,
                            std::span<const TrainingExample> batch) {
  RegressorModel m = RegressorModel::initialized(mode, k, seed, {kFeatureDim, 6, 3});
  std::vector<FeatureVector> zs;
  for (const TrainingExample& ex : batch) zs.push_back(ex.features);
  fit_input_normalization(m, zs);
  for (RegressorHead& h : m.heads) {
    for (double& w : h.w2) w *= 5.0;
  }
  return m;
}

// Central differences of the batch loss with the dynamic denominators held fixed.
std::vector<double> finite_difference_gradient(const RegressorModel& model, std::span<const TrainingExample> batch,
                                               const FilterPipeline& p, const TrainOptions& options,
                                               std::span<const double> denominators) {
  const std::vector<double> w = flatten_parameters(model);
  std::vector<double> fd(w.size());
  RegressorModel probe = model;
  const double h = 1e-4;
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::vector<double> wp = w;
    wp[i] = w[i] + h;
    assign_parameters(probe, wp);
    const double up = evaluate_total_frozen(probe, batch, p, options, denominators);
    wp[i] = w[i] - h;
    assign_parameters(probe, wp);
    const double down = evaluate_total_frozen(probe, batch, p, options, denominators);
    fd[i] = (up - down) / (2 * h);
  }
  return fd;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST_CASE("zero learning rate leaves the model unchanged") {
  const auto batch = small_batch(two_filters(), 3, 8, 1);
  const RegressorModel m = lively_model(RegressorMode::Cascade, 2, 2, batch);
  TrainOptions opts;
  opts.learning_rate = 0.0;
  const TrainStepResult r = train_step(m, batch, two_filters(), opts);
  CHECK(r.model == m);
  CHECK(r.report.stage.size() == 3);
  CHECK(r.report.reweighted.size() == 2);
  CHECK(r.report.total == doctest::Approx(r.report.mu * (r.report.reweighted[0] + r.report.reweighted[1])));
}

TEST_CASE("end-to-end gradients match finite differences") {
  const FilterPipeline& p = two_filters();
  const auto batch = small_batch(p, 2, 8, 5);
  for (RegressorMode mode : {RegressorMode::Cascade, RegressorMode::Multihead}) {
    const RegressorModel m = lively_model(mode, 2, 6, batch);
    for (int variant = 0; variant < 4; ++variant) {
      TrainOptions opts;
      opts.dynamic = variant == 0 || variant == 3;
      opts.denominator = variant == 3 ? DenominatorScope::Batch : DenominatorScope::Sample;
      opts.loss_mode = variant == 2 ? LossMode::FinalOnly : LossMode::Staged;
      const GradientResult g = compute_gradients(m, batch, p, opts);
      const auto fd = finite_difference_gradient(m, batch, p, opts, g.denominators);
      CAPTURE(variant);
      CHECK(relative_error(flatten_parameters(g.gradient), fd) < 1e-3);
    }
  }
}

TEST_CASE("loss modes") {
  const FilterPipeline& p = two_filters();
  const auto batch = small_batch(p, 2, 8, 9);
  const RegressorModel m = lively_model(RegressorMode::Cascade, 2, 10, batch);

  TrainOptions staged;
  staged.dynamic = false;
  const LossReport plain = evaluate_batch(m, batch, p, staged);
  CHECK(plain.stage[0] == 0.0);
  CHECK(plain.reweighted[0] == doctest::Approx(plain.stage[1]));
  CHECK(plain.total == doctest::Approx(10.0 * (plain.stage[1] + plain.stage[2])));

  TrainOptions final_only;
  final_only.loss_mode = LossMode::FinalOnly;
  const LossReport fin = evaluate_batch(m, batch, p, final_only);
  CHECK(fin.reweighted[0] == 0.0);
  CHECK(fin.total == doctest::Approx(10.0 * fin.stage[2]));
  CHECK(fin.stage[2] == doctest::Approx(plain.stage[2]));

  const LossReport dyn = evaluate_batch(m, batch, p, TrainOptions{});
  for (double r : dyn.reweighted) CHECK(r >= 0.0);

  // Batch scope applies the reweighting to the batch-mean stage losses.
  TrainOptions scoped;
  scoped.denominator = DenominatorScope::Batch;
  const LossReport b = evaluate_batch(m, batch, p, scoped);
  const std::vector<double> expect = dynamic_reweight(plain.stage);
  REQUIRE(b.reweighted.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b.reweighted[i] == doctest::Approx(expect[i]));
  CHECK(compute_gradients(m, batch, p, scoped).denominators.size() == 1);
  CHECK(compute_gradients(m, batch, p, TrainOptions{}).denominators.size() == 2);
}

TEST_CASE("single-sample descent decreases the loss over every 50-step window") {
  const FilterPipeline p = FilterPipeline::standard();
  const auto batch = small_batch(p, 1, 16, 21);
  RegressorModel model = RegressorModel::initialized(RegressorMode::Cascade, 6, 22);
  TrainOptions opts;
  opts.learning_rate = 1e-2;
  opts.dynamic = false;
  std::vector<double> totals;
  for (int step = 0; step < 200; ++step) {
    TrainStepResult r = train_step(model, batch, p, opts, step);
    totals.push_back(r.report.total);
    model = std::move(r.model);
  }
  for (std::size_t t = 0; t + 50 < totals.size(); ++t) CHECK(totals[t + 50] < totals[t]);
  CHECK(totals.back() < 0.5 * totals.front());
}

TEST_CASE("divergence surfaces the step index") {
  const auto batch = small_batch(two_filters(), 1, 8, 3);
  RegressorModel m = RegressorModel::initialized(RegressorMode::Cascade, 2, 4);
  m.heads[1].w1[0] = std::numeric_limits<double>::quiet_NaN();
  SgdOptimizer sgd(0.1);
  try {
    train_step(m, batch, two_filters(), TrainOptions{}, sgd, 17);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.step() == 17);
  }
}

TEST_CASE("training is deterministic and rejects bad input") {
  const FilterPipeline& p = two_filters();
  const auto corpus = small_batch(p, 6, 8, 30);
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.batch_size = 4;
  cfg.seed = 3;
  cfg.options.learning_rate = 1e-2;
  const RegressorModel init = RegressorModel::initialized(RegressorMode::Cascade, 2, 31);
  const RegressorModel a = train(init, corpus, p, cfg);
  const RegressorModel b = train(init, corpus, p, cfg);
  CHECK(a == b);
  CHECK_FALSE(a == init);

  CHECK_THROWS_AS(train_step(init, std::span<const TrainingExample>{}, p, TrainOptions{}), DomainError);
  CHECK_THROWS_AS(train_step(RegressorModel::initialized(RegressorMode::Cascade, 3, 1), corpus, p, TrainOptions{}),
                  DomainError);
}
