#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "harmonizer/image.hpp"

namespace harmonizer {

/// The six global color filters. Each takes one scalar argument in [-1,1]
/// and is the identity at argument 0.
enum class FilterKind : std::uint8_t {
  Brightness,
  Contrast,
  Saturation,
  Temperature,
  Highlight,
  Shadow,
};

inline constexpr std::array<FilterKind, 6> kAllFilterKinds = {
    FilterKind::Brightness,  FilterKind::Contrast,  FilterKind::Saturation,
    FilterKind::Temperature, FilterKind::Highlight, FilterKind::Shadow,
};

/// Rec.601 luma weights.
inline constexpr Rgb kLumaWeights = {0.299, 0.587, 0.114};

std::string_view to_string(FilterKind kind) noexcept;
std::optional<FilterKind> parse_filter_kind(std::string_view name) noexcept;

/// 0.299 R + 0.587 G + 0.114 B, evaluated so that gray pixels map to
/// their own value exactly.
inline double luminance(double r, double g, double b) noexcept {
  return g + kLumaWeights[0] * (r - g) + kLumaWeights[2] * (b - g);
}
inline double luminance(const Rgb& p) noexcept { return luminance(p[0], p[1], p[2]); }

/// Applies `kind` to every pixel, clamping each component to [0,1].
/// Throws DomainError if `arg` is outside [-1,1].
Image apply_filter(const Image& image, FilterKind kind, double arg);

/// In-place variant over interleaved RGB triples. Same arithmetic as apply_filter.
void apply_filter_inplace(std::span<double> rgb, FilterKind kind, double arg);

/// In-place variant that also ORs a flag into `clamped` (one byte per component)
/// whenever the unclamped output left [0,1].
void apply_filter_inplace(std::span<double> rgb, FilterKind kind, double arg, std::span<std::uint8_t> clamped);

/// Applies `kinds[i]` with `args[i]` in order, reading `src` and writing `dst`.
/// Results match chaining apply_filter exactly.
void apply_filter_chain(std::span<const double> src, std::span<double> dst, std::span<const FilterKind> kinds,
                        std::span<const double> args);

/// d out / d arg per component; zero where the unclamped output left [0,1].
Gradient filter_arg_grad(const Image& image, FilterKind kind, double arg);

/// Sum over components of upstream * d out / d arg. Equivalent to
/// reducing `upstream * filter_arg_grad(...)` without materializing it.
double filter_arg_grad_dot(const Image& image, FilterKind kind, double arg, const Gradient& upstream);

/// upstream^T * (d out / d in), pixel by pixel, with clamped outputs
/// contributing nothing.
Gradient filter_input_jvp(const Image& image, FilterKind kind, double arg, const Gradient& upstream);

}  // namespace harmonizer
