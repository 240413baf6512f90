#include "harmonizer/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

double masked_mse(const Image& a, const Image& b, const Mask& mask) {
  if (!a.same_shape(b) || !mask.matches(a)) throw DomainError("masked_mse needs equal dimensions");
  const double weight = mask.sum();
  if (!(weight > 0.0)) throw DomainError("masked_mse needs a nonempty mask");
  auto pa = a.data();
  auto pb = b.data();
  double acc = 0.0;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask[p];
    if (m == 0.0) continue;
    double s = 0.0;
    for (std::size_t c = 3 * p; c < 3 * p + 3; ++c) s += (pa[c] - pb[c]) * (pa[c] - pb[c]);
    acc += m * s;
  }
  return acc / (3.0 * weight);
}

Gradient masked_mse_gradient(const Image& a, const Image& b, const Mask& mask, double scale) {
  if (!a.same_shape(b) || !mask.matches(a)) throw DomainError("masked_mse_gradient needs equal dimensions");
  const double weight = mask.sum();
  if (!(weight > 0.0)) throw DomainError("masked_mse_gradient needs a nonempty mask");
  Gradient g(a.width(), a.height());
  auto pa = a.data();
  auto pb = b.data();
  auto pg = g.data();
  const double k = 2.0 * scale / (3.0 * weight);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask[p] * k;
    for (std::size_t c = 3 * p; c < 3 * p + 3; ++c) pg[c] = m * (pa[c] - pb[c]);
  }
  return g;
}

std::vector<double> stage_losses(const StageTrace& trace, std::span<const Image> targets, const Mask& mask) {
  if (trace.stages.size() != targets.size()) {
    throw DomainError("trace has " + std::to_string(trace.stages.size()) + " stages but " +
                      std::to_string(targets.size()) + " targets");
  }
  std::vector<double> losses;
  losses.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) losses.push_back(masked_mse(trace.stages[i], targets[i], mask));
  return losses;
}

std::vector<double> dynamic_reweight(std::span<const double> losses) {
  if (losses.size() < 2) throw DomainError("dynamic_reweight needs L_0 and at least one stage loss");
  for (double l : losses) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("stage losses must be finite and nonnegative");
  }
  const double denom = std::max(losses.back(), kDenominatorFloor);
  std::vector<double> out(losses.size() - 1);
  for (std::size_t i = 1; i < losses.size(); ++i) out[i - 1] = std::max((losses[i] - losses[i - 1]) / denom, 0.0);
  return out;
}

double total_loss(std::span<const double> reweighted, double mu) {
  return mu * std::accumulate(reweighted.begin(), reweighted.end(), 0.0);
}

}  // namespace harmonizer
