#include "harmonizer/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "harmonizer/error.hpp"

namespace harmonizer {

namespace {

struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> bytes;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

// `gray` selects PNG_FORMAT_GA (then keeps G) instead of PNG_FORMAT_RGBA (then keeps RGB).
Raster8 decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path, bool gray) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(path.string(), std::string("invalid PNG: ") + image.message);
  }
  image.format = gray ? PNG_FORMAT_GA : PNG_FORMAT_RGBA;
  const int in_channels = gray ? 2 : 4;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string reason = image.message;
    png_image_free(&image);
    throw IoError(path.string(), "corrupt PNG: " + reason);
  }
  Raster8 r{static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3, {}};
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.bytes.resize(n * r.channels);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < r.channels; ++c) r.bytes[p * r.channels + c] = buffer[p * in_channels + c];
  }
  return r;
}

// Binary PNM (P5/P6) with maxval 255.
Raster8 decode_pnm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  auto fail = [&](const std::string& why) -> IoError { return IoError(path.string(), "invalid PNM: " + why); };
  auto next_int = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000) throw fail("header value too large");
    }
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw IoError(path.string(), "unsupported format (expected PNG, binary PPM or PGM)");
  }
  Raster8 r;
  r.channels = bytes[1] == '6' ? 3 : 1;
  r.width = next_int();
  r.height = next_int();
  const int maxval = next_int();
  if (maxval != 255) throw fail("only maxval 255 is supported");
  if (r.width <= 0 || r.height <= 0) throw fail("nonpositive dimensions");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("missing header terminator");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(r.width) * r.height * r.channels;
  if (bytes.size() - pos < need) throw fail("truncated pixel data");
  r.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return r;
}

Raster8 decode(const std::filesystem::path& path, bool gray) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (is_png(bytes)) return decode_png(bytes, path, gray);
  return decode_pnm(bytes, path);
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

bool wants_pnm(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

void encode(const Raster8& r, const std::filesystem::path& path) {
  if (wants_pnm(path)) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << (r.channels == 3 ? "P6" : "P5") << "\n" << r.width << " " << r.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
    if (!out) throw IoError(path.string(), "write failed");
    return;
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(r.width);
  image.height = static_cast<png_uint_32>(r.height);
  image.format = r.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, r.bytes.data(), 0, nullptr)) {
    throw IoError(path.string(), std::string("PNG write failed: ") + image.message);
  }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const Raster8 r = decode(path, false);
  Image image(r.width, r.height);
  auto data = image.data();
  const std::size_t n = image.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t b = r.channels == 3 ? r.bytes[3 * p + c] : r.bytes[p];
      data[3 * p + c] = b / 255.0;
    }
  }
  return image;
}

Mask load_mask(const std::filesystem::path& path) {
  const Raster8 r = decode(path, true);
  Mask mask(r.width, r.height);
  auto data = mask.data();
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) data[p] = r.bytes[p * r.channels] / 255.0;
  return mask;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  Raster8 r{image.width(), image.height(), 3, {}};
  r.bytes.reserve(image.data().size());
  for (double v : image.data()) r.bytes.push_back(to_byte(v));
  encode(r, path);
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Raster8 r{mask.width(), mask.height(), 1, {}};
  r.bytes.reserve(mask.pixel_count());
  for (double v : mask.data()) r.bytes.push_back(to_byte(v));
  encode(r, path);
}

Image quantize(const Image& image) {
  Image out = image;
  for (double& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace harmonizer
