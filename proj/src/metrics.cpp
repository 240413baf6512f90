#include "harmonizer/metrics.hpp"

#include <cmath>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

constexpr double kScale = 255.0;

void check_shapes(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DomainError("metric inputs differ in dimensions");
  if (a.empty()) throw DomainError("metric inputs are empty");
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_shapes(a, b);
  auto pa = a.data();
  auto pb = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = kScale * (pa[i] - pb[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pa.size());
}

double fmse(const Image& a, const Image& b, const Mask& mask) {
  check_shapes(a, b);
  if (!mask.matches(a)) throw DomainError("mask dimensions do not match the images");
  const double weight = mask.sum();
  if (!(weight > 0.0)) throw DomainError("fMSE needs a nonempty foreground mask");
  auto pa = a.data();
  auto pb = b.data();
  double acc = 0.0;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask[p];
    if (m == 0.0) continue;
    // Same summation order as mse, so an all-ones mask reproduces it exactly.
    for (std::size_t c = 3 * p; c < 3 * p + 3; ++c) {
      const double d = kScale * (pa[c] - pb[c]);
      acc += m * d * d;
    }
  }
  return acc / (3.0 * weight);
}

double psnr_from_mse(double mse_value) {
  if (mse_value < kScale * kScale * std::pow(10.0, -9.9)) return kPsnrCap;
  return 10.0 * std::log10(kScale * kScale / mse_value);
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

EvalRecord evaluate(const Image& output, const Image& ground_truth, const Mask& mask, std::string id) {
  EvalRecord r;
  r.id = std::move(id);
  r.mse = mse(output, ground_truth);
  r.fmse = fmse(output, ground_truth, mask);
  r.psnr = psnr_from_mse(r.mse);
  return r;
}

EvalRecord mean_record(std::span<const EvalRecord> records) {
  EvalRecord m;
  m.id = "mean";
  if (records.empty()) return m;
  for (const EvalRecord& r : records) {
    m.mse += r.mse;
    m.fmse += r.fmse;
    m.psnr += r.psnr;
  }
  const double n = static_cast<double>(records.size());
  m.mse /= n;
  m.fmse /= n;
  m.psnr /= n;
  return m;
}

}  // namespace harmonizer
