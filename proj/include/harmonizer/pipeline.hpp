#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "harmonizer/filters.hpp"
#include "harmonizer/image.hpp"

namespace harmonizer {

/// Gaussian prior over one filter's synthesis argument.
struct GaussianPrior {
  double mean = 0.0;
  double stddev = 0.2;

  friend bool operator==(const GaussianPrior&, const GaussianPrior&) = default;
};

inline constexpr std::size_t kMaxPipelineFilters = 8;

/// Ordered filter list with one synthesis prior per filter.
struct FilterPipeline {
  std::vector<FilterKind> filters;
  std::vector<GaussianPrior> priors;

  std::size_t size() const noexcept { return filters.size(); }

  /// Throws DomainError on an empty, oversized, duplicated or badly-primed pipeline.
  void validate() const;

  /// Brightness, Contrast, Saturation, Temperature, Highlight, Shadow with N(0, 0.2^2) priors.
  static FilterPipeline standard();
  static FilterPipeline of(std::initializer_list<FilterKind> kinds, GaussianPrior prior = {});

  friend bool operator==(const FilterPipeline&, const FilterPipeline&) = default;
};

/// One argument per pipeline filter, each in [-1,1].
class ArgVector {
 public:
  ArgVector() = default;
  explicit ArgVector(std::size_t size) : values_(size, 0.0) {}
  ArgVector(std::initializer_list<double> values);
  explicit ArgVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Throws DomainError if any value is outside [-1,1] or non-finite.
  void validate() const;

  friend bool operator==(const ArgVector&, const ArgVector&) = default;

 private:
  std::vector<double> values_;
};

/// All intermediate images of a forward pipeline run: stages[0] is the
/// input and stages[i] the output of filter i.
struct StageTrace {
  std::vector<Image> stages;
  ArgVector args;

  const Image& output() const { return stages.back(); }
};

StageTrace apply_pipeline(const Image& image, const FilterPipeline& pipeline, const ArgVector& args);

/// Final stage only, processed row by row in place. Bit-identical to
/// apply_pipeline(...).output().
Image run_pipeline(const Image& image, const FilterPipeline& pipeline, const ArgVector& args);

/// mask * harmonized + (1 - mask) * original.
Image composite_output(const Image& original, const Image& harmonized, const Mask& mask);

/// Reverse-mode d loss / d args. `stage_upstream[i]` is the direct loss
/// gradient with respect to trace.stages[i + 1]; empty gradients count as zero.
std::vector<double> pipeline_arg_gradients(const StageTrace& trace, const FilterPipeline& pipeline,
                                           std::span<const Gradient> stage_upstream);

}  // namespace harmonizer
