#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "harmonizer/features.hpp"
#include "harmonizer/losses.hpp"
#include "harmonizer/pipeline.hpp"
#include "harmonizer/regressor.hpp"
#include "harmonizer/synth.hpp"

namespace harmonizer {

/// Staged: a loss on every filter output. FinalOnly: only the last stage,
/// for composites without intermediate targets.
enum class LossMode : std::uint8_t { Staged, FinalOnly };

std::string_view to_string(LossMode mode) noexcept;

/// Which L_k normalizes the dynamic reweighting: each sample's own, or the
/// batch mean (reweighting then runs on batch-mean stage losses).
enum class DenominatorScope : std::uint8_t { Sample, Batch };

std::string_view to_string(DenominatorScope scope) noexcept;

struct TrainOptions {
  double learning_rate = 3e-4;
  LossMode loss_mode = LossMode::Staged;
  /// Reweight staged losses by their increments over the detached final loss.
  bool dynamic = true;
  DenominatorScope denominator = DenominatorScope::Sample;
  double mu = kDefaultLossScale;
};

/// A composite sample paired with its cached prediction features.
struct TrainingExample {
  CompositeSample sample;
  FeatureVector features;
};

TrainingExample make_training_example(CompositeSample sample);
std::vector<TrainingExample> make_training_examples(std::vector<CompositeSample> samples);

/// Mean loss over a batch, forward pass only.
LossReport evaluate_batch(const RegressorModel& model, std::span<const TrainingExample> batch,
                          const FilterPipeline& pipeline, const TrainOptions& options);

/// Mean total loss with the dynamic denominators pinned to `denominators`
/// (as returned in GradientResult). This is the function whose gradient
/// compute_gradients returns.
double evaluate_total_frozen(const RegressorModel& model, std::span<const TrainingExample> batch,
                             const FilterPipeline& pipeline, const TrainOptions& options,
                             std::span<const double> denominators);

struct GradientResult {
  RegressorModel gradient;         ///< d total / d weights, same shape as the model
  LossReport report;               ///< batch mean
  std::vector<double> denominators;  ///< detached max(L_k, eps): one per sample, or one for a batch-scoped run
};

/// Reverse-mode gradient of the mean total loss: losses -> pipeline -> heads and embeddings.
GradientResult compute_gradients(const RegressorModel& model, std::span<const TrainingExample> batch,
                                 const FilterPipeline& pipeline, const TrainOptions& options);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(RegressorModel& model, const RegressorModel& gradient) = 0;
  virtual void set_learning_rate(double learning_rate) = 0;
};

class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(double learning_rate) : learning_rate_(learning_rate) {}
  void step(RegressorModel& model, const RegressorModel& gradient) override;
  void set_learning_rate(double learning_rate) override { learning_rate_ = learning_rate; }

 private:
  double learning_rate_;
};

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(RegressorModel& model, const RegressorModel& gradient) override;
  void set_learning_rate(double learning_rate) override { learning_rate_ = learning_rate; }

 private:
  double learning_rate_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

enum class OptimizerKind : std::uint8_t { Sgd, Adam };

std::string_view to_string(OptimizerKind kind) noexcept;
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate);

struct TrainStepResult {
  RegressorModel model;
  LossReport report;  ///< loss before the update
};

/// One plain gradient-descent update with options.learning_rate.
/// Throws TrainingError (carrying `step_index`) on a non-finite loss or gradient.
TrainStepResult train_step(const RegressorModel& model, std::span<const TrainingExample> batch,
                           const FilterPipeline& pipeline, const TrainOptions& options, long step_index = 0);

/// Same, updating `model` in place through `optimizer`.
LossReport train_step(RegressorModel& model, std::span<const TrainingExample> batch, const FilterPipeline& pipeline,
                      const TrainOptions& options, Optimizer& optimizer, long step_index = 0);

struct TrainConfig {
  TrainOptions options;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t steps = 1875;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Multiply the learning rate by decay_factor every decay_every steps (0 = constant).
  std::size_t decay_every = 780;
  double decay_factor = 0.1;
};

using StepCallback = std::function<void(long step, const LossReport&)>;

/// Minibatch training over `corpus`, reshuffled every epoch with `config.seed`.
RegressorModel train(RegressorModel model, std::span<const TrainingExample> corpus, const FilterPipeline& pipeline,
                     const TrainConfig& config, const StepCallback& on_step = {});

}  // namespace harmonizer
