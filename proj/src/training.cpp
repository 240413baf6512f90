#include "harmonizer/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

// Stage losses L_0..L_k of one forward pass. L_0 is pinned to zero: the
// composite foreground is I_0 by construction.
std::vector<double> stage_terms(const StageTrace& trace, const CompositeSample& sample, const TrainOptions& options) {
  const std::size_t k = trace.stages.size() - 1;
  if (sample.stage_targets.size() != k + 1) throw DomainError("sample stage targets do not match the pipeline");
  std::vector<double> stage(k + 1, 0.0);
  if (options.loss_mode == LossMode::FinalOnly) {
    stage[k] = masked_mse(trace.stages[k], sample.stage_targets[k], sample.mask);
  } else {
    for (std::size_t i = 1; i <= k; ++i) stage[i] = masked_mse(trace.stages[i], sample.stage_targets[i], sample.mask);
  }
  return stage;
}

// Loss terms built from one set of stage losses and d total / d L_i.
struct Weighting {
  LossReport report;
  std::vector<double> coefficients;
  double denominator = 0.0;
};

// `frozen` < 0 means use max(L_k, eps) from `stage` itself.
Weighting reweight(std::vector<double> stage, const TrainOptions& options, double frozen) {
  const std::size_t k = stage.size() - 1;
  Weighting out;
  LossReport& r = out.report;
  r.mu = options.mu;
  r.stage = std::move(stage);
  out.denominator = frozen >= 0.0 ? frozen : std::max(r.stage[k], kDenominatorFloor);

  out.coefficients.assign(k + 1, 0.0);
  r.reweighted.assign(k, 0.0);
  if (options.loss_mode == LossMode::FinalOnly) {
    r.reweighted[k - 1] = r.stage[k];
    out.coefficients[k] = options.mu;
  } else if (!options.dynamic) {
    for (std::size_t i = 1; i <= k; ++i) {
      r.reweighted[i - 1] = r.stage[i];
      out.coefficients[i] = options.mu;
    }
  } else {
    const double scale = options.mu / out.denominator;
    for (std::size_t i = 1; i <= k; ++i) {
      const double delta = (r.stage[i] - r.stage[i - 1]) / out.denominator;
      if (delta > 0.0) {
        r.reweighted[i - 1] = delta;
        out.coefficients[i] += scale;
        out.coefficients[i - 1] -= scale;
      }
    }
  }
  r.total = total_loss(r.reweighted, options.mu);
  return out;
}

bool batch_scoped(const TrainOptions& options) {
  return options.denominator == DenominatorScope::Batch && options.dynamic && options.loss_mode == LossMode::Staged;
}

void accumulate(LossReport& acc, const LossReport& r, double weight) {
  if (acc.stage.empty()) {
    acc.stage.assign(r.stage.size(), 0.0);
    acc.reweighted.assign(r.reweighted.size(), 0.0);
    acc.mu = r.mu;
  }
  for (std::size_t i = 0; i < r.stage.size(); ++i) acc.stage[i] += weight * r.stage[i];
  for (std::size_t i = 0; i < r.reweighted.size(); ++i) acc.reweighted[i] += weight * r.reweighted[i];
  acc.total += weight * r.total;
}

// Combines per-sample stage losses into the batch report and per-sample
// coefficients. `frozen` holds one denominator per sample, or one for the
// batch, or nothing.
struct BatchWeighting {
  LossReport report;
  std::vector<std::vector<double>> coefficients;
  std::vector<double> denominators;
};

BatchWeighting weigh_batch(const std::vector<std::vector<double>>& stages, const TrainOptions& options,
                           std::span<const double> frozen) {
  const double weight = 1.0 / static_cast<double>(stages.size());
  BatchWeighting out;
  if (batch_scoped(options)) {
    std::vector<double> mean(stages.front().size(), 0.0);
    for (const auto& st : stages) {
      for (std::size_t i = 0; i < st.size(); ++i) mean[i] += weight * st[i];
    }
    Weighting w = reweight(std::move(mean), options, frozen.empty() ? -1.0 : frozen[0]);
    out.report = std::move(w.report);
    out.denominators.push_back(w.denominator);
    out.coefficients.assign(stages.size(), w.coefficients);
  } else {
    for (std::size_t s = 0; s < stages.size(); ++s) {
      Weighting w = reweight(stages[s], options, frozen.empty() ? -1.0 : frozen[s]);
      accumulate(out.report, w.report, weight);
      out.denominators.push_back(w.denominator);
      out.coefficients.push_back(std::move(w.coefficients));
    }
  }
  for (auto& c : out.coefficients) {
    for (double& v : c) v *= weight;
  }
  return out;
}

using BatchView = std::span<const TrainingExample* const>;

std::vector<const TrainingExample*> pointers(std::span<const TrainingExample> batch) {
  std::vector<const TrainingExample*> out;
  out.reserve(batch.size());
  for (const TrainingExample& ex : batch) out.push_back(&ex);
  return out;
}

void check_batch(BatchView batch, const FilterPipeline& pipeline, const RegressorModel& model) {
  if (batch.empty()) throw DomainError("training batch is empty");
  if (model.arg_count() != pipeline.size()) throw DomainError("model head count does not match the pipeline");
  for (const TrainingExample* ex : batch) {
    if (ex->sample.xi.size() != pipeline.size()) throw DomainError("batch samples do not share the pipeline");
  }
}

bool finite_report(const LossReport& r) {
  return std::isfinite(r.total) && std::all_of(r.stage.begin(), r.stage.end(), [](double v) { return std::isfinite(v); });
}

double run_frozen(const RegressorModel& model, BatchView batch, const FilterPipeline& pipeline,
                  const TrainOptions& options, std::span<const double> denominators, LossReport* report) {
  check_batch(batch, pipeline, model);
  std::vector<std::vector<double>> stages;
  stages.reserve(batch.size());
  for (const TrainingExample* ex : batch) {
    const ArgVector theta = predict(ex->features, model);
    stages.push_back(stage_terms(apply_pipeline(ex->sample.composite, pipeline, theta), ex->sample, options));
  }
  BatchWeighting w = weigh_batch(stages, options, denominators);
  if (report != nullptr) *report = w.report;
  return w.report.total;
}

GradientResult gradients_impl(const RegressorModel& model, BatchView batch, const FilterPipeline& pipeline,
                              const TrainOptions& options) {
  check_batch(batch, pipeline, model);
  const std::size_t k = pipeline.size();
  GradientResult result{RegressorModel::zeros(model.mode, k, model.shape), {}, {}};
  std::vector<RegressorActivations> acts;
  std::vector<StageTrace> traces;
  std::vector<std::vector<double>> stages;
  for (const TrainingExample* ex : batch) {
    acts.push_back(forward_regressor(ex->features, model));
    const auto theta_values = acts.back().theta.values();
    if (!std::all_of(theta_values.begin(), theta_values.end(), [](double t) { return std::isfinite(t); })) {
      result.report.total = std::numeric_limits<double>::quiet_NaN();
      return result;
    }
    traces.push_back(apply_pipeline(ex->sample.composite, pipeline, acts.back().theta));
    stages.push_back(stage_terms(traces.back(), ex->sample, options));
  }
  BatchWeighting w = weigh_batch(stages, options, {});
  result.report = std::move(w.report);
  result.denominators = std::move(w.denominators);

  std::vector<Gradient> upstream(k);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const CompositeSample& sample = batch[s]->sample;
    for (std::size_t i = 1; i <= k; ++i) {
      const double c = w.coefficients[s][i];
      upstream[i - 1] = c != 0.0 ? masked_mse_gradient(traces[s].stages[i], sample.stage_targets[i], sample.mask, c)
                                 : Gradient{};
    }
    const std::vector<double> theta_grad = pipeline_arg_gradients(traces[s], pipeline, upstream);
    backward_regressor(model, acts[s], theta_grad, result.gradient);
  }
  return result;
}

LossReport step_impl(RegressorModel& model, BatchView batch, const FilterPipeline& pipeline,
                     const TrainOptions& options, Optimizer& optimizer, long step_index) {
  GradientResult g = gradients_impl(model, batch, pipeline, options);
  if (!finite_report(g.report)) throw TrainingError(step_index, "non-finite loss");
  const std::vector<double> flat = flatten_parameters(g.gradient);
  if (!std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); })) {
    throw TrainingError(step_index, "non-finite gradient");
  }
  optimizer.step(model, g.gradient);
  return g.report;
}

}  // namespace

std::string_view to_string(LossMode mode) noexcept { return mode == LossMode::Staged ? "staged" : "final"; }

std::string_view to_string(OptimizerKind kind) noexcept { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

std::string_view to_string(DenominatorScope scope) noexcept {
  return scope == DenominatorScope::Sample ? "sample" : "batch";
}

TrainingExample make_training_example(CompositeSample sample) {
  FeatureVector z = prediction_features(sample.composite, sample.mask);
  return TrainingExample{std::move(sample), std::move(z)};
}

std::vector<TrainingExample> make_training_examples(std::vector<CompositeSample> samples) {
  std::vector<TrainingExample> out;
  out.reserve(samples.size());
  for (CompositeSample& s : samples) out.push_back(make_training_example(std::move(s)));
  return out;
}

LossReport evaluate_batch(const RegressorModel& model, std::span<const TrainingExample> batch,
                          const FilterPipeline& pipeline, const TrainOptions& options) {
  LossReport report;
  run_frozen(model, pointers(batch), pipeline, options, {}, &report);
  return report;
}

double evaluate_total_frozen(const RegressorModel& model, std::span<const TrainingExample> batch,
                             const FilterPipeline& pipeline, const TrainOptions& options,
                             std::span<const double> denominators) {
  const std::size_t expected = batch_scoped(options) ? 1 : batch.size();
  if (denominators.size() != expected) {
    throw DomainError("need " + std::to_string(expected) + " frozen denominator(s), got " +
                      std::to_string(denominators.size()));
  }
  return run_frozen(model, pointers(batch), pipeline, options, denominators, nullptr);
}


GradientResult compute_gradients(const RegressorModel& model, std::span<const TrainingExample> batch,
                                 const FilterPipeline& pipeline, const TrainOptions& options) {
  return gradients_impl(model, pointers(batch), pipeline, options);
}

void SgdOptimizer::step(RegressorModel& model, const RegressorModel& gradient) {
  std::vector<double> w = flatten_parameters(model);
  const std::vector<double> g = flatten_parameters(gradient);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate_ * g[i];
  assign_parameters(model, w);
}

void AdamOptimizer::step(RegressorModel& model, const RegressorModel& gradient) {
  std::vector<double> w = flatten_parameters(model);
  const std::vector<double> g = flatten_parameters(gradient);
  if (m_.size() != w.size()) {
    m_.assign(w.size(), 0.0);
    v_.assign(w.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    w[i] -= learning_rate_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
  assign_parameters(model, w);
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<SgdOptimizer>(learning_rate);
  return std::make_unique<AdamOptimizer>(learning_rate);
}

LossReport train_step(RegressorModel& model, std::span<const TrainingExample> batch, const FilterPipeline& pipeline,
                      const TrainOptions& options, Optimizer& optimizer, long step_index) {
  return step_impl(model, pointers(batch), pipeline, options, optimizer, step_index);
}

TrainStepResult train_step(const RegressorModel& model, std::span<const TrainingExample> batch,
                           const FilterPipeline& pipeline, const TrainOptions& options, long step_index) {
  TrainStepResult out{model, {}};
  SgdOptimizer sgd(options.learning_rate);
  out.report = train_step(out.model, batch, pipeline, options, sgd, step_index);
  return out;
}

RegressorModel train(RegressorModel model, std::span<const TrainingExample> corpus, const FilterPipeline& pipeline,
                     const TrainConfig& config, const StepCallback& on_step) {
  if (corpus.empty()) throw DomainError("training corpus is empty");
  if (config.batch_size == 0) throw DomainError("batch size must be positive");
  model.validate();
  std::unique_ptr<Optimizer> optimizer = make_optimizer(config.optimizer, config.options.learning_rate);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<const TrainingExample*> batch;
  double lr = config.options.learning_rate;
  for (std::size_t step = 0; step < config.steps; ++step) {
    if (config.decay_every > 0 && step > 0 && step % config.decay_every == 0) {
      lr *= config.decay_factor;
      optimizer->set_learning_rate(lr);
    }
    batch.clear();
    while (batch.size() < std::min(config.batch_size, corpus.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&corpus[order[cursor++]]);
    }
    const LossReport report = step_impl(model, batch, pipeline, config.options, *optimizer, static_cast<long>(step));
    if (on_step) on_step(static_cast<long>(step), report);
  }
  return model;
}

}  // namespace harmonizer
