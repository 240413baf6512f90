#include <cstdio>
#include <filesystem>
#include <fstream>

#include <png.h>

#include "doctest.h"
#include "harmonizer/error.hpp"
#include "harmonizer/io.hpp"
#include "test_support.hpp"

using namespace harmonizer;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "harmonizer_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("png and ppm round trips are exact after quantization") {
  const Image img = quantize(testing::random_image(13, 7, 1));
  for (const char* name : {"rt.png", "rt.ppm"}) {
    const fs::path path = scratch(name);
    save_image(img, path);
    CHECK(load_image(path) == img);
  }
  Mask m(13, 7);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.data()[i] = static_cast<double>(i % 256) / 255.0;
  for (const char* name : {"m.png", "m.pgm"}) {
    const fs::path path = scratch(name);
    save_mask(m, path);
    CHECK(load_mask(path) == m);
  }
}

TEST_CASE("quantize is idempotent and clamps") {
  Image img = testing::random_image(5, 5, 2);
  img.at(0, 0, 0) = 1.7;
  img.at(1, 0, 2) = -0.2;
  const Image q = quantize(img);
  CHECK(quantize(q) == q);
  CHECK(q.at(0, 0, 0) == 1.0);
  CHECK(q.at(1, 0, 2) == 0.0);
}

TEST_CASE("rgba png drops alpha") {
  const fs::path path = scratch("rgba.png");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = 2;
  desc.height = 1;
  desc.format = PNG_FORMAT_RGBA;
  const unsigned char px[8] = {255, 0, 51, 0, 10, 20, 30, 128};
  REQUIRE(png_image_write_to_file(&desc, path.c_str(), 0, px, 0, nullptr));
  const Image img = load_image(path);
  REQUIRE(img.width() == 2);
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 0, 2) == doctest::Approx(0.2));
  CHECK(img.at(1, 0, 1) == doctest::Approx(20.0 / 255.0));
}

TEST_CASE("unreadable files raise IoError with the path") {
  CHECK_THROWS_AS(load_image(scratch("does_not_exist.png")), IoError);

  const fs::path full = scratch("full.png");
  save_image(testing::random_image(16, 16, 3), full);
  const fs::path cut = scratch("cut.png");
  {
    std::ifstream in(full, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  try {
    load_image(cut);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.path() == cut.string());
  }

  const fs::path junk = scratch("junk.ppm");
  std::ofstream(junk) << "P6\n4 4\n65535\n";
  CHECK_THROWS_AS(load_image(junk), IoError);
  const fs::path short_ppm = scratch("short.ppm");
  std::ofstream(short_ppm) << "P6\n4 4\n255\nabc";
  CHECK_THROWS_AS(load_image(short_ppm), IoError);
}
