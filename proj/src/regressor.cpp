#include "harmonizer/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

RegressorHead empty_head(std::size_t input_dim, std::size_t hidden_dim) {
  RegressorHead head;
  head.input_dim = input_dim;
  head.w1.assign(hidden_dim * input_dim, 0.0);
  head.b1.assign(hidden_dim, 0.0);
  head.w2.assign(hidden_dim, 0.0);
  return head;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

template <class Model, class Fn>
void visit_parameters(Model& model, Fn&& fn) {
  for (auto& head : model.heads) {
    for (auto& w : head.w1) fn(w);
    for (auto& b : head.b1) fn(b);
    for (auto& w : head.w2) fn(w);
    fn(head.b2);
  }
  for (auto& e : model.embeddings) {
    for (auto& v : e) fn(v);
  }
}

}  // namespace

std::string_view to_string(RegressorMode mode) noexcept {
  return mode == RegressorMode::Cascade ? "cascade" : "multihead";
}

std::size_t RegressorModel::parameter_count() const noexcept {
  std::size_t n = 0;
  visit_parameters(*this, [&](const double&) { ++n; });
  return n;
}

void RegressorModel::validate() const {
  const std::size_t k = heads.size();
  if (k == 0 || k > kMaxPipelineFilters) throw DomainError("regressor needs 1 to 8 heads");
  if (shape.feature_dim == 0 || shape.hidden_dim == 0 || shape.embed_dim == 0) {
    throw DomainError("regressor dimensions must be positive");
  }
  if (input_shift.size() != shape.feature_dim || input_scale.size() != shape.feature_dim) {
    throw DomainError("input normalization must match the feature dimension");
  }
  if (!all_finite(input_shift) || !all_finite(input_scale) ||
      std::any_of(input_scale.begin(), input_scale.end(), [](double s) { return !(s > 0.0); })) {
    throw DomainError("input normalization must be finite with positive scale");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const RegressorHead& h = heads[i];
    const std::size_t in = head_input_dim(i);
    if (h.input_dim != in || h.w1.size() != shape.hidden_dim * in || h.b1.size() != shape.hidden_dim ||
        h.w2.size() != shape.hidden_dim) {
      throw DomainError("head " + std::to_string(i) + " has inconsistent weight shapes");
    }
    if (!all_finite(h.w1) || !all_finite(h.b1) || !all_finite(h.w2) || !std::isfinite(h.b2)) {
      throw DomainError("head " + std::to_string(i) + " has non-finite weights");
    }
  }
  const std::size_t expected_embeddings = mode == RegressorMode::Cascade ? k - 1 : 0;
  if (embeddings.size() != expected_embeddings) throw DomainError("wrong number of argument embeddings");
  for (const auto& e : embeddings) {
    if (e.size() != shape.embed_dim || !all_finite(e)) throw DomainError("malformed argument embedding");
  }
}

RegressorModel RegressorModel::zeros(RegressorMode mode, std::size_t arg_count, RegressorShape shape) {
  if (arg_count == 0 || arg_count > kMaxPipelineFilters) throw DomainError("regressor needs 1 to 8 heads");
  RegressorModel model;
  model.mode = mode;
  model.shape = shape;
  model.input_shift.assign(shape.feature_dim, 0.0);
  model.input_scale.assign(shape.feature_dim, 1.0);
  for (std::size_t i = 0; i < arg_count; ++i) {
    model.heads.push_back(empty_head(model.head_input_dim(i), shape.hidden_dim));
  }
  if (mode == RegressorMode::Cascade) {
    model.embeddings.assign(arg_count - 1, std::vector<double>(shape.embed_dim, 0.0));
  }
  return model;
}

RegressorModel RegressorModel::initialized(RegressorMode mode, std::size_t arg_count, std::uint64_t seed,
                                           RegressorShape shape) {
  RegressorModel model = zeros(mode, arg_count, shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (RegressorHead& head : model.heads) {
    const double a1 = 1.0 / std::sqrt(static_cast<double>(head.input_dim));
    for (double& w : head.w1) w = a1 * u(rng);
    const double a2 = 0.1 / std::sqrt(static_cast<double>(shape.hidden_dim));
    for (double& w : head.w2) w = a2 * u(rng);
  }
  for (auto& e : model.embeddings) {
    for (double& v : e) v = u(rng);
  }
  return model;
}

std::vector<double> flatten_parameters(const RegressorModel& model) {
  std::vector<double> out;
  out.reserve(model.parameter_count());
  visit_parameters(model, [&](const double& v) { out.push_back(v); });
  return out;
}

void assign_parameters(RegressorModel& model, std::span<const double> values) {
  if (values.size() != model.parameter_count()) throw DomainError("parameter vector has the wrong length");
  std::size_t i = 0;
  visit_parameters(model, [&](double& v) { v = values[i++]; });
}

void fit_input_normalization(RegressorModel& model, std::span<const FeatureVector> features) {
  const std::size_t d = model.shape.feature_dim;
  if (features.empty()) throw DomainError("cannot fit input normalization on an empty corpus");
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  for (const FeatureVector& z : features) {
    if (z.size() != d) throw DomainError("feature dimension mismatch");
    for (std::size_t j = 0; j < d; ++j) mean[j] += z[j];
  }
  for (double& m : mean) m /= static_cast<double>(features.size());
  for (const FeatureVector& z : features) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (z[j] - mean[j]) * (z[j] - mean[j]);
  }
  model.input_shift = mean;
  model.input_scale.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    model.input_scale[j] = std::max(std::sqrt(var[j] / static_cast<double>(features.size())), 1e-3);
  }
}

RegressorActivations forward_regressor(const FeatureVector& z, const RegressorModel& model) {
  const std::size_t d = model.shape.feature_dim;
  const std::size_t hdim = model.shape.hidden_dim;
  const std::size_t edim = model.shape.embed_dim;
  if (z.size() != d) {
    throw DomainError("feature vector has " + std::to_string(z.size()) + " values, model expects " +
                      std::to_string(d));
  }
  if (model.heads.empty()) throw DomainError("regressor has no heads");
  const std::size_t k = model.heads.size();

  std::vector<double> base(d);
  for (std::size_t j = 0; j < d; ++j) base[j] = (z[j] - model.input_shift[j]) / model.input_scale[j];

  RegressorActivations acts;
  acts.inputs.resize(k);
  acts.hidden.resize(k);
  acts.theta = ArgVector(k);
  for (std::size_t i = 0; i < k; ++i) {
    const RegressorHead& head = model.heads[i];
    std::vector<double>& x = acts.inputs[i];
    x = base;
    if (model.mode == RegressorMode::Cascade) {
      for (std::size_t j = 0; j < i; ++j) {
        for (std::size_t e = 0; e < edim; ++e) x.push_back(model.embeddings[j][e] * acts.theta[j]);
      }
    }
    if (x.size() != head.input_dim) throw DomainError("head input width mismatch");
    std::vector<double>& h = acts.hidden[i];
    h.resize(hdim);
    double out = head.b2;
    for (std::size_t r = 0; r < hdim; ++r) {
      const double* w = head.w1.data() + r * head.input_dim;
      double s = head.b1[r];
      for (std::size_t c = 0; c < head.input_dim; ++c) s += w[c] * x[c];
      h[r] = std::tanh(s);
      out += head.w2[r] * h[r];
    }
    acts.theta[i] = std::tanh(out);
  }
  return acts;
}

ArgVector predict_multihead(const FeatureVector& z, const RegressorModel& model) {
  if (model.mode != RegressorMode::Multihead) throw DomainError("predict_multihead needs a multihead model");
  return forward_regressor(z, model).theta;
}

ArgVector predict_cascade(const FeatureVector& z, const RegressorModel& model) {
  if (model.mode != RegressorMode::Cascade) throw DomainError("predict_cascade needs a cascade model");
  return forward_regressor(z, model).theta;
}

ArgVector predict(const FeatureVector& z, const RegressorModel& model) {
  return forward_regressor(z, model).theta;
}

void backward_regressor(const RegressorModel& model, const RegressorActivations& acts,
                        std::span<const double> theta_grad, RegressorModel& grad) {
  const std::size_t k = model.heads.size();
  const std::size_t d = model.shape.feature_dim;
  const std::size_t hdim = model.shape.hidden_dim;
  const std::size_t edim = model.shape.embed_dim;
  if (theta_grad.size() != k || acts.theta.size() != k || grad.heads.size() != k) {
    throw DomainError("backward_regressor shape mismatch");
  }
  std::vector<double> g(theta_grad.begin(), theta_grad.end());
  std::vector<double> gh(hdim);
  for (std::size_t i = k; i-- > 0;) {
    const RegressorHead& head = model.heads[i];
    RegressorHead& ghead = grad.heads[i];
    const std::vector<double>& x = acts.inputs[i];
    const std::vector<double>& h = acts.hidden[i];
    const double theta = acts.theta[i];
    const double gout = g[i] * (1.0 - theta * theta);
    if (gout == 0.0) continue;
    ghead.b2 += gout;
    for (std::size_t r = 0; r < hdim; ++r) {
      ghead.w2[r] += gout * h[r];
      gh[r] = gout * head.w2[r] * (1.0 - h[r] * h[r]);
      ghead.b1[r] += gh[r];
      double* gw = ghead.w1.data() + r * head.input_dim;
      for (std::size_t c = 0; c < head.input_dim; ++c) gw[c] += gh[r] * x[c];
    }
    if (model.mode != RegressorMode::Cascade) continue;
    for (std::size_t j = 0; j < i; ++j) {
      for (std::size_t e = 0; e < edim; ++e) {
        const std::size_t col = d + j * edim + e;
        double gx = 0.0;
        for (std::size_t r = 0; r < hdim; ++r) gx += head.w1[r * head.input_dim + col] * gh[r];
        grad.embeddings[j][e] += gx * acts.theta[j];
        g[j] += model.embeddings[j][e] * gx;
      }
    }
  }
}

}  // namespace harmonizer
