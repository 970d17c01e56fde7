#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace itof;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("itofflow_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Image> float_frames(std::mt19937_64& rng, int n, int w, int h) {
  std::vector<Image> out;
  for (int k = 0; k < n; ++k) {
    Image img = testutil::random_image(rng, w, h, -5, 5);
    for (double& v : img) v = static_cast<float>(v);
    out.push_back(img);
  }
  return out;
}

}  // namespace

TEST(RasterFile, RoundTripIsLossless) {
  const auto dir = temp_dir("roundtrip");
  std::mt19937_64 rng(1);
  const auto frames = float_frames(rng, 12, 7, 5);
  RasterMeta meta;
  meta.config = SensorConfig::make({20e6, 50e6, 70e6}, 2);
  write_raster(dir / "a.raw", frames, meta);
  EXPECT_EQ(fs::file_size(dir / "a.raw"), 4u * 7 * 5 * 12);
  const auto rf = read_raster(dir / "a.raw");
  EXPECT_EQ(rf.meta.width, 7);
  EXPECT_EQ(rf.meta.height, 5);
  EXPECT_EQ(rf.meta.frames, 12);
  EXPECT_EQ(rf.meta.config, meta.config);
  ASSERT_EQ(rf.frames.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) EXPECT_EQ(rf.frames[k], frames[k]);
}

TEST(RasterFile, PayloadIsLittleEndianRowMajor) {
  const auto dir = temp_dir("layout");
  Image img(2, 2);
  img(1, 0) = 1.0;  // second sample in the file
  write_raster(dir / "b.raw", {img}, RasterMeta{});
  std::ifstream in(dir / "b.raw", std::ios::binary);
  unsigned char bytes[16];
  in.read(reinterpret_cast<char*>(bytes), 16);
  // 1.0f = 0x3f800000, little-endian
  EXPECT_EQ(bytes[4], 0x00);
  EXPECT_EQ(bytes[6], 0x80);
  EXPECT_EQ(bytes[7], 0x3f);
}

TEST(RasterFile, SidecarFields) {
  const auto dir = temp_dir("sidecar");
  RasterMeta meta;
  meta.config = SensorConfig::make({20e6}, 2);
  write_raster(dir / "c.raw", std::vector<Image>(4, Image(3, 2)), meta);
  std::ifstream in(dir / "c.json");
  const auto j = nlohmann::json::parse(in);
  for (const char* key : {"width", "height", "frames", "frequencies_hz", "phase_shifts", "taps", "timestep_layout",
                          "reference_timestep", "dtype", "endianness"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["dtype"], "f32");
  EXPECT_EQ(j["endianness"], "LE");
  EXPECT_EQ(j["timestep_layout"], (std::vector<int>{0, 1, 0, 1}));
}

TEST(RasterFile, MissingSidecarIsInputError) {
  const auto dir = temp_dir("missing");
  write_raster(dir / "d.raw", {Image(2, 2)}, RasterMeta{});
  fs::remove(dir / "d.json");
  EXPECT_THROW(read_raster(dir / "d.raw"), InputError);
}

TEST(RasterFile, TruncatedPayloadIsInputError) {
  const auto dir = temp_dir("truncated");
  write_raster(dir / "e.raw", {Image(4, 4), Image(4, 4)}, RasterMeta{});
  fs::resize_file(dir / "e.raw", 4 * 16 + 8);
  EXPECT_THROW(read_raster(dir / "e.raw"), InputError);
}

TEST(RasterFile, BadSidecarIsInputError) {
  const auto dir = temp_dir("badsidecar");
  write_raster(dir / "f.raw", {Image(2, 2)}, RasterMeta{});
  std::ofstream(dir / "f.json") << "{\"width\": 2}";
  try {
    read_raster(dir / "f.raw");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("height"), std::string::npos);
  }
}

TEST(Pfm, HeaderAndBottomUpRows) {
  const auto dir = temp_dir("pfm");
  Image img(2, 2);
  img(0, 1) = 3.0;  // bottom row comes first
  write_pfm(dir / "g.pfm", img);
  std::ifstream in(dir / "g.pfm", std::ios::binary);
  std::string magic, scale;
  int w, h;
  in >> magic >> w >> h >> scale;
  in.get();
  float first;
  in.read(reinterpret_cast<char*>(&first), 4);
  EXPECT_EQ(magic, "Pf");
  EXPECT_EQ(w, 2);
  EXPECT_EQ(scale, "-1.0");
  EXPECT_EQ(first, 3.0f);
}

TEST(Scene, ParsesDocumentedSchema) {
  const auto j = nlohmann::json::parse(R"({
    "width": 64, "height": 32,
    "background": {"depth": 4.5, "amplitude": 0.8, "offset": 1.0, "texture": "checker", "texture_period": 6},
    "camera_velocity": [0.5, -1],
    "sprites": [{"shape": "disk", "depth": 2, "center": [10, 12], "radius": 5, "velocity": [2, 0],
                 "texture": "stripes", "texture_contrast": 0.25}]
  })");
  const auto s = parse_scene(j);
  EXPECT_EQ(s.width, 64);
  EXPECT_EQ(s.background_depth, 4.5);
  EXPECT_EQ(s.background.texture, Texture::checker);
  EXPECT_EQ(s.camera_vx, 0.5);
  EXPECT_EQ(s.camera_vy, -1.0);
  ASSERT_EQ(s.sprites.size(), 1u);
  EXPECT_EQ(s.sprites[0].shape, SpriteShape::disk);
  EXPECT_EQ(s.sprites[0].radius, 5.0);
  EXPECT_EQ(s.sprites[0].look.texture_contrast, 0.25);
}

TEST(Scene, ErrorsNameTheField) {
  auto message = [](const char* text) {
    try {
      parse_scene(nlohmann::json::parse(text));
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"height": 4, "background": {"depth": 1}})").find("scene.width"), std::string::npos);
  EXPECT_NE(message(R"({"width": 4, "height": 4, "background": {}})").find("scene.background.depth"),
            std::string::npos);
  EXPECT_NE(message(R"({"width": 4, "height": 4, "background": {"depth": 1},
                        "sprites": [{"depth": 1, "center": [1, 1]}, {"depth": "far", "center": [1, 1]}]})")
                .find("scene.sprites[1].depth"),
            std::string::npos);
  EXPECT_NE(message(R"({"width": 4, "height": 4, "background": {"depth": 1, "texture": "plaid"}})")
                .find("scene.background.texture"),
            std::string::npos);
  EXPECT_NE(message(R"({"width": 4, "height": 4, "background": {"depth": 1, "amplitude": -1}})")
                .find("scene.background.amplitude"),
            std::string::npos);
}

TEST(TraceCsv, HeaderAndRows) {
  std::vector<LossReport> reports(3);
  for (int k = 0; k < 3; ++k) {
    reports[k].iteration = k;
    reports[k].total = 1.0 / (k + 1);
  }
  const auto csv = trace_csv(reports);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kLossReportCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(rows));
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}
