#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "harmonizer/features.hpp"
#include "harmonizer/pipeline.hpp"

namespace harmonizer {

enum class RegressorMode : std::uint8_t { Cascade, Multihead };

std::string_view to_string(RegressorMode mode) noexcept;

/// One argument head: tanh hidden layer, then a scalar tanh output.
struct RegressorHead {
  std::size_t input_dim = 0;
  std::vector<double> w1;  ///< hidden_dim x input_dim, row-major
  std::vector<double> b1;  ///< hidden_dim
  std::vector<double> w2;  ///< hidden_dim
  double b2 = 0.0;

  friend bool operator==(const RegressorHead&, const RegressorHead&) = default;
};

struct RegressorShape {
  std::size_t feature_dim = kFeatureDim;
  std::size_t hidden_dim = 32;
  std::size_t embed_dim = 8;

  friend bool operator==(const RegressorShape&, const RegressorShape&) = default;
};

/// Argument regressor over a FeatureVector.
///
/// In cascade mode head i sees [Z ; embed(theta_1) ; ... ; embed(theta_{i-1})],
/// where embed(theta_j) = embeddings[j] * theta_j. In multihead mode every head
/// sees Z only and `embeddings` is empty. Z is standardized with
/// (z - input_shift) / input_scale before entering any head.
struct RegressorModel {
  RegressorMode mode = RegressorMode::Cascade;
  RegressorShape shape;
  std::vector<double> input_shift;
  std::vector<double> input_scale;
  std::vector<RegressorHead> heads;
  std::vector<std::vector<double>> embeddings;

  std::size_t arg_count() const noexcept { return heads.size(); }
  std::size_t head_input_dim(std::size_t head) const noexcept {
    return mode == RegressorMode::Cascade ? shape.feature_dim + shape.embed_dim * head : shape.feature_dim;
  }
  std::size_t parameter_count() const noexcept;

  /// Throws DomainError on inconsistent shapes or non-finite weights.
  void validate() const;

  /// All weights zero, identity input normalization.
  static RegressorModel zeros(RegressorMode mode, std::size_t arg_count, RegressorShape shape = {});
  /// Uniform fan-in scaled initialization, deterministic in `seed`.
  static RegressorModel initialized(RegressorMode mode, std::size_t arg_count, std::uint64_t seed,
                                    RegressorShape shape = {});

  friend bool operator==(const RegressorModel&, const RegressorModel&) = default;
};

/// Flattened view over every trainable weight in a fixed order
/// (head by head: w1, b1, w2, b2; then embeddings). Input normalization is not trainable.
std::vector<double> flatten_parameters(const RegressorModel& model);
void assign_parameters(RegressorModel& model, std::span<const double> values);

/// Sets input_shift/input_scale to the per-dimension mean and stddev of `features`
/// (scale floored at 1e-3).
void fit_input_normalization(RegressorModel& model, std::span<const FeatureVector> features);

/// Intermediate values of one forward pass, kept for backpropagation.
struct RegressorActivations {
  std::vector<std::vector<double>> inputs;  ///< per head, standardized Z plus embeddings
  std::vector<std::vector<double>> hidden;  ///< per head, post-tanh
  ArgVector theta;
};

/// theta_i = tanh(head_i(Z)). Throws DomainError unless the model is multihead.
ArgVector predict_multihead(const FeatureVector& z, const RegressorModel& model);
/// theta_i = tanh(head_i([Z ; embeddings of theta_1..theta_{i-1}])). Throws unless cascade.
ArgVector predict_cascade(const FeatureVector& z, const RegressorModel& model);
/// Dispatches on model.mode.
ArgVector predict(const FeatureVector& z, const RegressorModel& model);

RegressorActivations forward_regressor(const FeatureVector& z, const RegressorModel& model);

/// Accumulates d loss / d weights into `grad` (same shape as `model`) given
/// d loss / d theta for the final outputs. Cascade paths through the
/// embeddings are included.
void backward_regressor(const RegressorModel& model, const RegressorActivations& acts,
                        std::span<const double> theta_grad, RegressorModel& grad);

}  // namespace harmonizer
