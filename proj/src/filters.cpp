#include "harmonizer/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

constexpr double kTemperatureShift = 0.25;

void check_arg(double arg) {
  if (!(arg >= -1.0 && arg <= 1.0)) {
    throw DomainError("filter argument outside [-1,1]: " + std::to_string(arg));
  }
}

inline double clamp01(double v) noexcept { return std::min(std::max(v, 0.0), 1.0); }
inline bool out_of_range(double v) noexcept { return v < 0.0 || v > 1.0; }

// Unclamped output of one pixel. `gain` is 2^arg, used by Brightness only.
template <FilterKind K>
inline void raw_pixel(const double* in, double* out, double arg, double gain) noexcept {
  if constexpr (K == FilterKind::Brightness) {
    for (int c = 0; c < 3; ++c) out[c] = in[c] * gain;
  } else if constexpr (K == FilterKind::Contrast) {
    for (int c = 0; c < 3; ++c) out[c] = in[c] + arg * (in[c] - 0.5);
  } else if constexpr (K == FilterKind::Saturation) {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) out[c] = in[c] + arg * (in[c] - lum);
  } else if constexpr (K == FilterKind::Temperature) {
    out[0] = in[0] + kTemperatureShift * arg;
    out[1] = in[1];
    out[2] = in[2] - kTemperatureShift * arg;
  } else if constexpr (K == FilterKind::Highlight) {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) out[c] = in[c] + arg * lum;
  } else {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) out[c] = in[c] + arg * (1.0 - lum);
  }
}

// d raw / d arg for one pixel.
template <FilterKind K>
inline void arg_derivative(const double* in, double* d, double arg, double gain) noexcept {
  if constexpr (K == FilterKind::Brightness) {
    for (int c = 0; c < 3; ++c) d[c] = std::numbers::ln2 * in[c] * gain;
  } else if constexpr (K == FilterKind::Contrast) {
    for (int c = 0; c < 3; ++c) d[c] = in[c] - 0.5;
  } else if constexpr (K == FilterKind::Saturation) {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) d[c] = in[c] - lum;
  } else if constexpr (K == FilterKind::Temperature) {
    d[0] = kTemperatureShift;
    d[1] = 0.0;
    d[2] = -kTemperatureShift;
  } else if constexpr (K == FilterKind::Highlight) {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) d[c] = lum;
  } else {
    const double lum = luminance(in[0], in[1], in[2]);
    for (int c = 0; c < 3; ++c) d[c] = 1.0 - lum;
  }
  (void)arg;
}

// Vector-Jacobian product for one pixel; `u` is upstream already masked by activity.
template <FilterKind K>
inline void input_vjp(const double* u, double* res, double arg, double gain) noexcept {
  if constexpr (K == FilterKind::Brightness) {
    for (int c = 0; c < 3; ++c) res[c] = u[c] * gain;
  } else if constexpr (K == FilterKind::Contrast) {
    for (int c = 0; c < 3; ++c) res[c] = u[c] * (1.0 + arg);
  } else if constexpr (K == FilterKind::Temperature) {
    for (int c = 0; c < 3; ++c) res[c] = u[c];
  } else {
    const double total = u[0] + u[1] + u[2];
    if constexpr (K == FilterKind::Saturation) {
      for (int c = 0; c < 3; ++c) res[c] = (1.0 + arg) * u[c] - arg * kLumaWeights[c] * total;
    } else if constexpr (K == FilterKind::Highlight) {
      for (int c = 0; c < 3; ++c) res[c] = u[c] + arg * kLumaWeights[c] * total;
    } else {
      for (int c = 0; c < 3; ++c) res[c] = u[c] - arg * kLumaWeights[c] * total;
    }
  }
}

// `src` may equal `dst`.
template <FilterKind K, bool Track>
void apply_kernel(const double* src, double* dst, std::size_t n, double arg, std::uint8_t* clamped) noexcept {
  const double gain = std::exp2(arg);
  for (std::size_t i = 0; i < n; ++i, src += 3, dst += 3) {
    double raw[3];
    raw_pixel<K>(src, raw, arg, gain);
    for (int c = 0; c < 3; ++c) {
      if constexpr (Track) {
        if (out_of_range(raw[c])) clamped[3 * i + c] = 1;
      }
      dst[c] = clamp01(raw[c]);
    }
  }
}

template <bool Track>
void dispatch_apply(const double* src, double* dst, std::size_t n, FilterKind kind, double arg,
                    std::uint8_t* clamped) {
  switch (kind) {
    case FilterKind::Brightness: return apply_kernel<FilterKind::Brightness, Track>(src, dst, n, arg, clamped);
    case FilterKind::Contrast: return apply_kernel<FilterKind::Contrast, Track>(src, dst, n, arg, clamped);
    case FilterKind::Saturation: return apply_kernel<FilterKind::Saturation, Track>(src, dst, n, arg, clamped);
    case FilterKind::Temperature: return apply_kernel<FilterKind::Temperature, Track>(src, dst, n, arg, clamped);
    case FilterKind::Highlight: return apply_kernel<FilterKind::Highlight, Track>(src, dst, n, arg, clamped);
    case FilterKind::Shadow: return apply_kernel<FilterKind::Shadow, Track>(src, dst, n, arg, clamped);
  }
}

// Planar variant for blocks of separate channel arrays.
template <FilterKind K>
void planar_kernel(double* __restrict r, double* __restrict g, double* __restrict b, std::size_t n, double arg) noexcept {
  const double gain = std::exp2(arg);
  for (std::size_t i = 0; i < n; ++i) {
    const double in[3] = {r[i], g[i], b[i]};
    double raw[3];
    raw_pixel<K>(in, raw, arg, gain);
    r[i] = clamp01(raw[0]);
    g[i] = clamp01(raw[1]);
    b[i] = clamp01(raw[2]);
  }
}

void dispatch_planar(double* r, double* g, double* b, std::size_t n, FilterKind kind, double arg) noexcept {
  switch (kind) {
    case FilterKind::Brightness: return planar_kernel<FilterKind::Brightness>(r, g, b, n, arg);
    case FilterKind::Contrast: return planar_kernel<FilterKind::Contrast>(r, g, b, n, arg);
    case FilterKind::Saturation: return planar_kernel<FilterKind::Saturation>(r, g, b, n, arg);
    case FilterKind::Temperature: return planar_kernel<FilterKind::Temperature>(r, g, b, n, arg);
    case FilterKind::Highlight: return planar_kernel<FilterKind::Highlight>(r, g, b, n, arg);
    case FilterKind::Shadow: return planar_kernel<FilterKind::Shadow>(r, g, b, n, arg);
  }
}

template <bool Track>
void dispatch_apply(std::span<double> rgb, FilterKind kind, double arg, std::uint8_t* clamped) {
  dispatch_apply<Track>(rgb.data(), rgb.data(), rgb.size() / 3, kind, arg, clamped);
}

template <FilterKind K>
void arg_grad_kernel(const Image& image, double arg, Gradient& out) noexcept {
  const double gain = std::exp2(arg);
  const double* p = image.data().data();
  double* g = out.data().data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i, p += 3, g += 3) {
    double raw[3];
    raw_pixel<K>(p, raw, arg, gain);
    arg_derivative<K>(p, g, arg, gain);
    for (int c = 0; c < 3; ++c) {
      if (out_of_range(raw[c])) g[c] = 0.0;
    }
  }
}

template <FilterKind K>
double arg_grad_dot_kernel(const Image& image, double arg, const Gradient& upstream) noexcept {
  const double gain = std::exp2(arg);
  const double* p = image.data().data();
  const double* u = upstream.data().data();
  double acc = 0.0;
  for (std::size_t i = 0; i < image.pixel_count(); ++i, p += 3, u += 3) {
    double raw[3];
    double d[3];
    raw_pixel<K>(p, raw, arg, gain);
    arg_derivative<K>(p, d, arg, gain);
    for (int c = 0; c < 3; ++c) {
      if (!out_of_range(raw[c])) acc += u[c] * d[c];
    }
  }
  return acc;
}

template <FilterKind K>
void jvp_kernel(const Image& image, double arg, const Gradient& upstream, Gradient& out) noexcept {
  const double gain = std::exp2(arg);
  const double* p = image.data().data();
  const double* up = upstream.data().data();
  double* r = out.data().data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i, p += 3, up += 3, r += 3) {
    double raw[3];
    raw_pixel<K>(p, raw, arg, gain);
    double u[3];
    for (int c = 0; c < 3; ++c) u[c] = out_of_range(raw[c]) ? 0.0 : up[c];
    input_vjp<K>(u, r, arg, gain);
  }
}

template <template <FilterKind> class Op, class... Args>
auto visit_kind(FilterKind kind, Args&&... args) {
  switch (kind) {
    case FilterKind::Brightness: return Op<FilterKind::Brightness>{}(std::forward<Args>(args)...);
    case FilterKind::Contrast: return Op<FilterKind::Contrast>{}(std::forward<Args>(args)...);
    case FilterKind::Saturation: return Op<FilterKind::Saturation>{}(std::forward<Args>(args)...);
    case FilterKind::Temperature: return Op<FilterKind::Temperature>{}(std::forward<Args>(args)...);
    case FilterKind::Highlight: return Op<FilterKind::Highlight>{}(std::forward<Args>(args)...);
    case FilterKind::Shadow: break;
  }
  return Op<FilterKind::Shadow>{}(std::forward<Args>(args)...);
}

template <FilterKind K>
struct ArgGradOp {
  void operator()(const Image& image, double arg, Gradient& out) const { arg_grad_kernel<K>(image, arg, out); }
};
template <FilterKind K>
struct ArgGradDotOp {
  double operator()(const Image& image, double arg, const Gradient& up) const {
    return arg_grad_dot_kernel<K>(image, arg, up);
  }
};
template <FilterKind K>
struct JvpOp {
  void operator()(const Image& image, double arg, const Gradient& up, Gradient& out) const {
    jvp_kernel<K>(image, arg, up, out);
  }
};

}  // namespace

std::string_view to_string(FilterKind kind) noexcept {
  switch (kind) {
    case FilterKind::Brightness: return "brightness";
    case FilterKind::Contrast: return "contrast";
    case FilterKind::Saturation: return "saturation";
    case FilterKind::Temperature: return "temperature";
    case FilterKind::Highlight: return "highlight";
    case FilterKind::Shadow: return "shadow";
  }
  return "unknown";
}

std::optional<FilterKind> parse_filter_kind(std::string_view name) noexcept {
  for (FilterKind kind : kAllFilterKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

Image apply_filter(const Image& image, FilterKind kind, double arg) {
  check_arg(arg);
  Image out = image;
  dispatch_apply<false>(out.data(), kind, arg, nullptr);
  return out;
}

void apply_filter_inplace(std::span<double> rgb, FilterKind kind, double arg) {
  check_arg(arg);
  dispatch_apply<false>(rgb, kind, arg, nullptr);
}

void apply_filter_inplace(std::span<double> rgb, FilterKind kind, double arg, std::span<std::uint8_t> clamped) {
  check_arg(arg);
  if (clamped.size() != rgb.size()) throw DomainError("clamp flags must have one entry per component");
  dispatch_apply<true>(rgb, kind, arg, clamped.data());
}

void apply_filter_chain(std::span<const double> src, std::span<double> dst, std::span<const FilterKind> kinds,
                        std::span<const double> args) {
  if (src.size() != dst.size() || src.size() % 3 != 0) throw DomainError("chain buffers must hold matching RGB triples");
  if (kinds.size() != args.size()) throw DomainError("chain needs one argument per filter");
  for (double arg : args) check_arg(arg);
  // Blocks small enough to stay in L1 across every filter.
  constexpr std::size_t kBlockPixels = 256;
  alignas(64) double r[kBlockPixels];
  alignas(64) double g[kBlockPixels];
  alignas(64) double b[kBlockPixels];
  const std::size_t pixels = src.size() / 3;
  for (std::size_t start = 0; start < pixels; start += kBlockPixels) {
    const std::size_t n = std::min(kBlockPixels, pixels - start);
    const double* in = src.data() + 3 * start;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = in[3 * i];
      g[i] = in[3 * i + 1];
      b[i] = in[3 * i + 2];
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) dispatch_planar(r, g, b, n, kinds[k], args[k]);
    double* out = dst.data() + 3 * start;
    for (std::size_t i = 0; i < n; ++i) {
      out[3 * i] = r[i];
      out[3 * i + 1] = g[i];
      out[3 * i + 2] = b[i];
    }
  }
}

Gradient filter_arg_grad(const Image& image, FilterKind kind, double arg) {
  check_arg(arg);
  Gradient out(image.width(), image.height());
  visit_kind<ArgGradOp>(kind, image, arg, out);
  return out;
}

double filter_arg_grad_dot(const Image& image, FilterKind kind, double arg, const Gradient& upstream) {
  check_arg(arg);
  if (!image.same_shape(upstream)) throw DomainError("upstream gradient shape does not match image");
  return visit_kind<ArgGradDotOp>(kind, image, arg, upstream);
}

Gradient filter_input_jvp(const Image& image, FilterKind kind, double arg, const Gradient& upstream) {
  check_arg(arg);
  if (!image.same_shape(upstream)) throw DomainError("upstream gradient shape does not match image");
  Gradient out(image.width(), image.height());
  visit_kind<JvpOp>(kind, image, arg, upstream, out);
  return out;
}

}  // namespace harmonizer
