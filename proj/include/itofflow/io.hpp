#pragma once

// On-disk formats.
//
// Raster files are a raw payload of little-endian float32 samples, row-major
// and frame-major (4 * width * height * frames bytes), next to a JSON sidecar
// with the same basename and extension ".json":
//
//   {"width":W, "height":H, "frames":N, "frequencies_hz":[...],
//    "phase_shifts":[...], "taps":T, "timestep_layout":[...],
//    "reference_timestep":R, "dtype":"f32", "endianness":"LE", "kind":"..."}
//
// `kind` names the payload: measurements, depth, flow (u,v per timestep),
// mask (0/1 per timestep), error or m3.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "itofflow/core.hpp"
#include "itofflow/losses.hpp"
#include "itofflow/sim.hpp"

namespace itof {

/// Bad user input: malformed files, schema violations, inconsistent layouts.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RasterMeta {
  int width = 0;
  int height = 0;
  int frames = 0;
  SensorConfig config;
  std::string kind = "measurements";
};

struct RasterFile {
  RasterMeta meta;
  std::vector<Image> frames;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& raw) {
  auto p = raw;
  p.replace_extension(".json");
  return p;
}

inline nlohmann::json meta_to_json(const RasterMeta& m) {
  nlohmann::json j;
  j["width"] = m.width;
  j["height"] = m.height;
  j["frames"] = m.frames;
  j["frequencies_hz"] = m.config.frequencies_hz;
  j["phase_shifts"] = m.config.phase_shifts;
  j["taps"] = m.config.taps;
  j["timestep_layout"] = m.config.timestep_layout;
  j["reference_timestep"] = m.config.reference_timestep;
  j["dtype"] = "f32";
  j["endianness"] = "LE";
  j["kind"] = m.kind;
  return j;
}

namespace io_detail {

template <class T>
T required(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

}  // namespace io_detail

inline RasterMeta meta_from_json(const nlohmann::json& j, const std::string& where) {
  using io_detail::required;
  RasterMeta m;
  m.width = required<int>(j, "width", where);
  m.height = required<int>(j, "height", where);
  m.frames = required<int>(j, "frames", where);
  m.config.frequencies_hz = required<std::vector<double>>(j, "frequencies_hz", where);
  m.config.phase_shifts = required<std::vector<double>>(j, "phase_shifts", where);
  m.config.taps = required<int>(j, "taps", where);
  m.config.timestep_layout = required<std::vector<int>>(j, "timestep_layout", where);
  m.config.reference_timestep = required<int>(j, "reference_timestep", where);
  if (required<std::string>(j, "dtype", where) != "f32") throw InputError(where + ": field 'dtype' must be \"f32\"");
  if (required<std::string>(j, "endianness", where) != "LE")
    throw InputError(where + ": field 'endianness' must be \"LE\"");
  m.kind = j.value("kind", std::string("measurements"));
  if (m.width <= 0 || m.height <= 0 || m.frames < 0) throw InputError(where + ": invalid raster dimensions");
  return m;
}

/// Writes payload and sidecar. Samples are narrowed to float32.
inline void write_raster(const std::filesystem::path& raw, const std::vector<Image>& frames, RasterMeta meta) {
  if (frames.empty()) throw InputError("refusing to write an empty raster file: " + raw.string());
  meta.width = frames.front().width();
  meta.height = frames.front().height();
  meta.frames = static_cast<int>(frames.size());
  if (raw.has_parent_path()) std::filesystem::create_directories(raw.parent_path());
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + raw.string());
  std::vector<char> buf(frames.front().size() * 4);
  for (const auto& f : frames) {
    require_same_shape(f, frames.front(), "write_raster");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto bits = io_detail::to_le(std::bit_cast<std::uint32_t>(static_cast<float>(f[i])));
      std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw InputError("write failed: " + raw.string());
  std::ofstream side(sidecar_path(raw));
  side << meta_to_json(meta).dump(2) << '\n';
  if (!side) throw InputError("write failed: " + sidecar_path(raw).string());
}

inline RasterFile read_raster(const std::filesystem::path& raw) {
  const auto side = sidecar_path(raw);
  if (!std::filesystem::exists(side)) throw InputError("missing sidecar: " + side.string());
  nlohmann::json j;
  try {
    std::ifstream in(side);
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(side.string() + ": invalid JSON (" + e.what() + ")");
  }
  RasterFile rf;
  rf.meta = meta_from_json(j, side.string());
  const std::size_t pixels = static_cast<std::size_t>(rf.meta.width) * rf.meta.height;
  const std::size_t expected = 4 * pixels * static_cast<std::size_t>(rf.meta.frames);
  std::error_code ec;
  const auto actual = std::filesystem::file_size(raw, ec);
  if (ec) throw InputError("cannot read payload: " + raw.string());
  if (actual != expected)
    throw InputError(raw.string() + ": payload has " + std::to_string(actual) + " bytes, sidecar implies " +
                     std::to_string(expected));
  std::ifstream in(raw, std::ios::binary);
  std::vector<char> buf(pixels * 4);
  for (int f = 0; f < rf.meta.frames; ++f) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw InputError("short read: " + raw.string());
    Image img(rf.meta.width, rf.meta.height);
    for (std::size_t i = 0; i < pixels; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, buf.data() + 4 * i, 4);
      img[i] = std::bit_cast<float>(io_detail::to_le(bits));
    }
    rf.frames.push_back(std::move(img));
  }
  return rf;
}

/// Single-frame PFM (grayscale "Pf", little-endian, bottom-to-top rows).
inline void write_pfm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
  for (int y = img.height() - 1; y >= 0; --y)
    for (int x = 0; x < img.width(); ++x) {
      const auto bits = io_detail::to_le(std::bit_cast<std::uint32_t>(static_cast<float>(img(x, y))));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
}

inline std::vector<Image> mask_frames(const std::vector<Mask>& masks) {
  std::vector<Image> out;
  for (const auto& m : masks) {
    Image img(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) img[i] = m[i] ? 1.0 : 0.0;
    out.push_back(std::move(img));
  }
  return out;
}

inline std::vector<Image> flow_frames(const std::vector<FlowField>& flows) {
  std::vector<Image> out;
  for (const auto& f : flows) {
    out.push_back(f.u);
    out.push_back(f.v);
  }
  return out;
}

inline std::vector<FlowField> frames_to_flows(const std::vector<Image>& frames) {
  if (frames.size() % 2 != 0) throw InputError("flow file must hold (u, v) frame pairs");
  std::vector<FlowField> out;
  for (std::size_t i = 0; i < frames.size(); i += 2) out.emplace_back(frames[i], frames[i + 1]);
  return out;
}

// --- Scene description -----------------------------------------------------
//
// {
//   "width": 128, "height": 128,
//   "background": {"depth": 4.0, "amplitude": 1.0, "offset": 1.5,
//                  "texture": "sine", "texture_period": 16, "texture_contrast": 0.3},
//   "camera_velocity": [0, 0],
//   "sprites": [{"shape": "rectangle", "depth": 2.0, "center": [52, 64],
//                "half_size": [20, 20], "velocity": [2, 0], "amplitude": 1.0,
//                "offset": 1.5, "texture": "none"},
//               {"shape": "disk", "radius": 10, ...}]
// }
//
// Everything except width, height, background.depth and per-sprite depth and
// center has a default.

namespace io_detail {

inline Texture parse_texture(const nlohmann::json& j, const std::string& where) {
  const auto name = j.value("texture", std::string("none"));
  if (name == "none") return Texture::none;
  if (name == "checker") return Texture::checker;
  if (name == "stripes") return Texture::stripes;
  if (name == "sine") return Texture::sine;
  throw InputError(where + ".texture: unknown texture '" + name + "'");
}

inline double number(const nlohmann::json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InputError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline std::pair<double, double> pair(const nlohmann::json& j, const std::string& key, std::pair<double, double> fallback,
                                      const std::string& where, bool needed = false) {
  if (!j.contains(key)) {
    if (needed) throw InputError(where + "." + key + ": missing field");
    return fallback;
  }
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw InputError(where + "." + key + ": expected a [x, y] number pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline SurfaceLook parse_look(const nlohmann::json& j, const std::string& where) {
  SurfaceLook l;
  l.amplitude = number(j, "amplitude", l.amplitude, where);
  l.offset = number(j, "offset", l.offset, where);
  l.texture = parse_texture(j, where);
  l.texture_period = number(j, "texture_period", l.texture_period, where);
  l.texture_contrast = number(j, "texture_contrast", l.texture_contrast, where);
  if (!(l.amplitude > 0)) throw InputError(where + ".amplitude: must be positive");
  if (!(l.offset >= 0)) throw InputError(where + ".offset: must be non-negative");
  if (!(l.texture_period > 0)) throw InputError(where + ".texture_period: must be positive");
  if (!(l.texture_contrast >= 0 && l.texture_contrast < 1))
    throw InputError(where + ".texture_contrast: must lie in [0, 1)");
  return l;
}

}  // namespace io_detail

inline SceneSpec parse_scene(const nlohmann::json& j) {
  using namespace io_detail;
  if (!j.is_object()) throw InputError("scene: expected a JSON object");
  SceneSpec s;
  for (const char* key : {"width", "height"}) {
    if (!j.contains(key)) throw InputError(std::string("scene.") + key + ": missing field");
    if (!j.at(key).is_number_integer() || j.at(key).get<int>() <= 0)
      throw InputError(std::string("scene.") + key + ": expected a positive integer");
  }
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  if (!j.contains("background") || !j.at("background").is_object())
    throw InputError("scene.background: missing object");
  const auto& bg = j.at("background");
  if (!bg.contains("depth")) throw InputError("scene.background.depth: missing field");
  s.background_depth = number(bg, "depth", 0.0, "scene.background");
  s.background = parse_look(bg, "scene.background");
  std::tie(s.camera_vx, s.camera_vy) = pair(j, "camera_velocity", {0.0, 0.0}, "scene");
  if (j.contains("sprites")) {
    if (!j.at("sprites").is_array()) throw InputError("scene.sprites: expected an array");
    for (std::size_t k = 0; k < j.at("sprites").size(); ++k) {
      const auto& js = j.at("sprites")[k];
      const std::string where = "scene.sprites[" + std::to_string(k) + "]";
      if (!js.is_object()) throw InputError(where + ": expected an object");
      Sprite sp;
      const auto shape = js.value("shape", std::string("rectangle"));
      if (shape == "rectangle") sp.shape = SpriteShape::rectangle;
      else if (shape == "disk") sp.shape = SpriteShape::disk;
      else throw InputError(where + ".shape: unknown shape '" + shape + "'");
      if (!js.contains("depth")) throw InputError(where + ".depth: missing field");
      sp.depth = number(js, "depth", 0.0, where);
      std::tie(sp.x, sp.y) = pair(js, "center", {0, 0}, where, true);
      std::tie(sp.half_width, sp.half_height) = pair(js, "half_size", {sp.half_width, sp.half_height}, where);
      sp.radius = number(js, "radius", sp.radius, where);
      std::tie(sp.vx, sp.vy) = pair(js, "velocity", {0.0, 0.0}, where);
      sp.look = parse_look(js, where);
      s.sprites.push_back(sp);
    }
  }
  return s;
}

inline SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scene file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return parse_scene(j);
}

/// One CSV row per report, preceded by kLossReportCsvHeader.
inline std::string trace_csv(const std::vector<LossReport>& reports) {
  std::ostringstream os;
  os << kLossReportCsvHeader << '\n' << std::setprecision(17);
  for (const auto& r : reports)
    os << r.iteration << ',' << r.tof << ',' << r.photo << ',' << r.smooth << ',' << r.edge << ',' << r.sim << ','
       << r.total << ',' << r.masked_fraction << '\n';
  return os.str();
}

}  // namespace itof
