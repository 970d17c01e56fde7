#pragma once

// Plumbing shared by the itofflow subcommands: hashing, PNG previews, run
// manifests and exit codes.

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itofflow/itofflow.hpp"

namespace itof::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { ok = 0, verification_failure = 1, input_error = 2, divergence = 3 };

/// Raised when a run finishes but its result is numerically unusable.
class Divergence : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot hash missing file: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

/// 8-bit grayscale PNG, linearly mapping [lo, hi] to [0, 255] with clamping.
/// Non-finite samples render black.
inline void write_png(const fs::path& path, const Image& img, double lo, double hi) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw InputError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw InputError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width()));
  const double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double v = img(x, y);
      const double t = std::isfinite(v) ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
      row[static_cast<std::size_t>(x)] = static_cast<png_byte>(std::lround(255.0 * t));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

/// Two rasters of equal height next to each other, separated by a 2 px gap
/// filled with `fill`.
inline Image side_by_side(const Image& a, const Image& b, double fill) {
  require_same_shape(a, b, "side_by_side");
  const int gap = 2;
  Image out(2 * a.width() + gap, a.height(), fill);
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      out(x, y) = a(x, y);
      out(a.width() + gap + x, y) = b(x, y);
    }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

/// Files a run read and wrote. Outputs are keyed by their suffix relative to
/// the run's output prefix, so a rerun into another prefix can be compared.
class RunRecord {
public:
  explicit RunRecord(std::string prefix) : prefix_(std::move(prefix)) {
    const fs::path p(prefix_);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }

  const std::string& prefix() const { return prefix_; }
  fs::path path(const std::string& suffix) const { return fs::path(prefix_ + suffix); }

  /// Registers an output (and its sidecar for .raw files).
  fs::path output(const std::string& suffix) {
    outputs_.push_back(suffix);
    if (suffix.ends_with(".raw")) outputs_.push_back(suffix.substr(0, suffix.size() - 4) + ".json");
    return path(suffix);
  }

  void input(const fs::path& p) {
    inputs_.push_back(p);
    if (p.extension() == ".raw") inputs_.push_back(sidecar_path(p));
  }

  json hashes_out() const {
    json j = json::object();
    for (const auto& s : outputs_) j[s] = sha256_file(path(s));
    return j;
  }

  json hashes_in() const {
    json j = json::object();
    for (const auto& p : inputs_) j[p.string()] = sha256_file(p);
    return j;
  }

private:
  std::string prefix_;
  std::vector<std::string> outputs_;
  std::vector<fs::path> inputs_;
};

inline std::string tool_version() {
#ifdef ITOFFLOW_VERSION
  return ITOFFLOW_VERSION;
#else
  return "dev";
#endif
}

/// Writes <prefix>_manifest.json. No timestamps or host data, so identical
/// runs produce identical manifests.
inline fs::path write_manifest(const RunRecord& rec, const std::string& command, const json& params,
                               const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "itofflow";
  m["version"] = tool_version();
  m["command"] = command;
  m["argv"] = argv;
  m["params"] = params;
  m["seed"] = params.value("seed", 0ULL);
  m["inputs"] = rec.hashes_in();
  m["outputs"] = rec.hashes_out();
  const auto path = rec.path("_manifest.json");
  write_text(path, m.dump(2) + "\n");
  return path;
}

inline std::string format_double(double v, int precision = 9) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace itof::cli
