#include "harmonizer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

void check_args(const FilterPipeline& pipeline, const ArgVector& args) {
  if (args.size() != pipeline.size()) {
    throw DomainError("argument count " + std::to_string(args.size()) + " does not match pipeline length " +
                      std::to_string(pipeline.size()));
  }
  args.validate();
}

}  // namespace

void FilterPipeline::validate() const {
  if (filters.empty() || filters.size() > kMaxPipelineFilters) {
    throw DomainError("pipeline must hold 1 to 8 filters, got " + std::to_string(filters.size()));
  }
  if (priors.size() != filters.size()) throw DomainError("pipeline needs exactly one prior per filter");
  for (std::size_t i = 0; i < filters.size(); ++i) {
    for (std::size_t j = i + 1; j < filters.size(); ++j) {
      if (filters[i] == filters[j]) {
        throw DomainError("duplicate filter in pipeline: " + std::string(to_string(filters[i])));
      }
    }
    const GaussianPrior& p = priors[i];
    if (!(p.stddev > 0.0 && p.stddev <= 1.0) || !(p.mean >= -1.0 && p.mean <= 1.0)) {
      throw DomainError("prior for " + std::string(to_string(filters[i])) +
                        " needs mean in [-1,1] and stddev in (0,1]");
    }
  }
}

FilterPipeline FilterPipeline::standard() {
  return of({FilterKind::Brightness, FilterKind::Contrast, FilterKind::Saturation, FilterKind::Temperature,
             FilterKind::Highlight, FilterKind::Shadow});
}

FilterPipeline FilterPipeline::of(std::initializer_list<FilterKind> kinds, GaussianPrior prior) {
  FilterPipeline p;
  p.filters.assign(kinds.begin(), kinds.end());
  p.priors.assign(p.filters.size(), prior);
  return p;
}

ArgVector::ArgVector(std::initializer_list<double> values) : values_(values) {}
ArgVector::ArgVector(std::vector<double> values) : values_(std::move(values)) {}

void ArgVector::validate() const {
  for (double v : values_) {
    if (!(v >= -1.0 && v <= 1.0)) throw DomainError("argument outside [-1,1]: " + std::to_string(v));
  }
}

StageTrace apply_pipeline(const Image& image, const FilterPipeline& pipeline, const ArgVector& args) {
  check_args(pipeline, args);
  StageTrace trace;
  trace.args = args;
  trace.stages.reserve(pipeline.size() + 1);
  trace.stages.push_back(image);
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    trace.stages.push_back(apply_filter(trace.stages.back(), pipeline.filters[i], args[i]));
  }
  return trace;
}

Image run_pipeline(const Image& image, const FilterPipeline& pipeline, const ArgVector& args) {
  check_args(pipeline, args);
  Image out(image.width(), image.height());
  apply_filter_chain(image.data(), out.data(), pipeline.filters, args.values());
  return out;
}

Image composite_output(const Image& original, const Image& harmonized, const Mask& mask) {
  if (!original.same_shape(harmonized) || !mask.matches(original)) {
    throw DomainError("composite_output needs equal image and mask dimensions");
  }
  Image out(original.width(), original.height());
  auto o = original.data();
  auto h = harmonized.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    const double m = mask[i];
    for (std::size_t c = 3 * i; c < 3 * i + 3; ++c) dst[c] = m * h[c] + (1.0 - m) * o[c];
  }
  return out;
}

std::vector<double> pipeline_arg_gradients(const StageTrace& trace, const FilterPipeline& pipeline,
                                           std::span<const Gradient> stage_upstream) {
  const std::size_t k = pipeline.size();
  if (trace.stages.size() != k + 1 || trace.args.size() != k) {
    throw DomainError("stage trace does not match the pipeline length");
  }
  if (stage_upstream.size() != k) throw DomainError("need one upstream gradient per filter stage");
  for (const Image& stage : trace.stages) {
    if (!stage.same_shape(trace.stages.front())) throw DomainError("stage trace images differ in shape");
  }
  for (const Gradient& g : stage_upstream) {
    if (!g.empty() && !g.same_shape(trace.stages.front())) {
      throw DomainError("upstream gradient shape does not match the trace");
    }
  }

  std::vector<double> grads(k, 0.0);
  const Image& first = trace.stages.front();
  Gradient carry(first.width(), first.height());
  bool carry_nonzero = false;
  for (std::size_t i = k; i-- > 0;) {
    const Gradient& direct = stage_upstream[i];
    if (!direct.empty()) {
      auto c = carry.data();
      auto d = direct.data();
      for (std::size_t j = 0; j < c.size(); ++j) c[j] += d[j];
      carry_nonzero = true;
    }
    if (!carry_nonzero) continue;
    const Image& input = trace.stages[i];
    grads[i] = filter_arg_grad_dot(input, pipeline.filters[i], trace.args[i], carry);
    if (i > 0) carry = filter_input_jvp(input, pipeline.filters[i], trace.args[i], carry);
  }
  return grads;
}

}  // namespace harmonizer
