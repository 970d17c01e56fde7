// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "itofflow/itofflow.hpp"

using namespace itof;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --- 1 ---------------------------------------------------------------------------

SceneSpec random_static_scene(std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec s;
  s.width = 48;
  s.height = 40;
  s.background_depth = 0.2 + 1.7 * range * u(rng);
  s.background.amplitude = 0.3 + u(rng);
  s.background.offset = 1.5 + u(rng);
  s.background.texture = static_cast<Texture>(rng() % 4);
  s.background.texture_period = 4 + 12 * u(rng);
  s.background.texture_contrast = 0.6 * u(rng);
  const int n = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < n; ++k) {
    Sprite sp;
    sp.shape = rng() % 2 ? SpriteShape::disk : SpriteShape::rectangle;
    sp.depth = 0.2 + 1.7 * range * u(rng);
    sp.x = s.width * u(rng);
    sp.y = s.height * u(rng);
    sp.half_width = 3 + 10 * u(rng);
    sp.half_height = 3 + 10 * u(rng);
    sp.radius = 3 + 10 * u(rng);
    sp.look.amplitude = 0.3 + u(rng);
    sp.look.offset = 1.5 + u(rng);
    sp.look.texture = static_cast<Texture>(rng() % 4);
    sp.look.texture_contrast = 0.6 * u(rng);
    s.sprites.push_back(sp);
  }
  return s;
}

Outcome depth_round_trip() {
  std::mt19937_64 rng(2024);
  double sum = 0.0, worst = 0.0;
  std::size_t n = 0;
  for (int taps : {1, 2, 4}) {
    const auto cfg = SensorConfig::make({20e6, 50e6, 70e6}, taps);
    for (int scene = 0; scene < 64; ++scene) {
      const auto b = simulate_bundle(random_static_scene(rng, d_max(20e6)), cfg);
      const auto rec = reconstruct_stack(b.static_gt);
      for (std::size_t fi = 0; fi < rec.size(); ++fi)
        for (std::size_t i = 0; i < rec[fi].values.size(); ++i) {
          const double e =
              circular_depth_error(rec[fi].values[i], b.depth_gt[fi].values[i], d_max(rec[fi].frequency_hz));
          sum += e;
          worst = std::max(worst, e);
          ++n;
        }
    }
  }
  const double mean = sum / static_cast<double>(n);
  return {mean < 1e-6, "mean |error| " + fmt("%.3g", mean) + " m, max " + fmt("%.3g", worst) + " m over 192 bundles"};
}

// --- 2 ---------------------------------------------------------------------------

Outcome phase_unwrap_toy() {
  const auto toy = make_toy_problem(128, 128, 1);
  OptimConfig cfg;
  cfg.method = OptimMethod::gd;
  cfg.iterations = 2000;
  cfg.step = 1e-2;
  cfg.unwrap = true;
  const auto on = toy_reconstruct_m3(toy.m0, toy.m1, toy.m2, toy.label, cfg);
  cfg.unwrap = false;
  const auto off = toy_reconstruct_m3(toy.m0, toy.m1, toy.m2, toy.label, cfg);
  const double range = d_max(toy.frequency_hz);
  Mask converged(128, 128);
  for (std::size_t i = 0; i < converged.size(); ++i) converged[i] = off.error[i] < 1e-3 * range ? 1 : 0;
  const double iou = mask_iou(converged, toy.same_branch);
  const double same = static_cast<double>(count_valid(toy.same_branch)) / static_cast<double>(converged.size());
  return {on.converged_fraction >= 0.99 && iou > 0.95,
          "unwrap on " + fmt("%.2f%%", 100 * on.converged_fraction) + " converged; off " +
              fmt("%.2f%%", 100 * off.converged_fraction) + " (same-branch " + fmt("%.2f%%", 100 * same) +
              "), IoU " + fmt("%.4f", iou)};
}

// --- 3 ---------------------------------------------------------------------------

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.string() + "' && '" ITOFFLOW_CLI_PATH "' " + args + " >> '" + (dir / "log.txt").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("itofflow_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome gradient_suite() {
  const auto dir = scratch("gradcheck");
  const int code = run_cli(dir, "gradcheck --trials 100 --seed 7 -o gc");
  std::ifstream in(dir / "gc_report.csv");
  std::string line, worst_op;
  std::getline(in, line);
  int ops = 0, passed = 0;
  double worst_margin = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string name, trials, err, thr, ok;
    std::getline(ss, name, ',');
    std::getline(ss, trials, ',');
    std::getline(ss, err, ',');
    std::getline(ss, thr, ',');
    std::getline(ss, ok, ',');
    ++ops;
    passed += (ok == "1" && std::stoi(trials) >= 100) ? 1 : 0;
    const double margin = std::stod(err) / std::stod(thr);
    if (margin >= worst_margin) {
      worst_margin = margin;
      worst_op = name;
    }
  }
  return {code == 0 && ops > 0 && passed == ops,
          std::to_string(passed) + "/" + std::to_string(ops) + " ops pass at 100 trials, worst error/threshold " +
              fmt("%.2g", worst_margin) + " (" + worst_op + ")"};
}

// --- 4 ---------------------------------------------------------------------------

Outcome unwrapped_equivalence() {
  const double range = d_max(20e6);
  const int n = 1000;
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d_hat = range * i / n, d = range * j / n;
      const double a = unwrapped_error_lookup(d_hat, d, range);
      const double b = unwrapped_error_min_form(d_hat, d, range);
      mismatches += a == b ? 0 : 1;
      worst = std::max(worst, a);
    }
  return {mismatches == 0 && worst <= range / 2,
          std::to_string(mismatches) + " mismatches on 10^6 pairs, max loss " + fmt("%.6f", worst / range) +
              " d_max"};
}

// --- 5 ---------------------------------------------------------------------------

Outcome affine_invariance() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int taps : {1, 2, 4}) {
    MeasurementStack stack;
    stack.config = SensorConfig::make({20e6, 50e6, 70e6}, taps);
    for (std::size_t c = 0; c < stack.config.capture_count(); ++c) {
      Image f(64, 64);
      for (double& v : f) v = u(rng);
      stack.frames.push_back(f);
    }
    const auto base = reconstruct_stack(stack, 0.0);
    auto compare = [&](const MeasurementStack& other) {
      const auto d = reconstruct_stack(other, 0.0);
      for (std::size_t fi = 0; fi < d.size(); ++fi)
        for (std::size_t i = 0; i < d[fi].values.size(); ++i)
          worst = std::max(worst, std::abs(d[fi].values[i] - base[fi].values[i]));
    };
    for (double a : {0.5, 2.0, 10.0})
      for (double b : {-1.0, 0.0, 3.0}) {
        MeasurementStack t = stack;
        for (auto& f : t.frames)
          for (double& v : f) v = a * v + b;
        compare(t);
        compare(instance_normalize(t));
      }
  }
  return {worst <= 1e-9, "max depth change " + fmt("%.3g", worst) + " m over 9 affine maps, 3 tap layouts"};
}

// --- 6 ---------------------------------------------------------------------------

Outcome flow_recovery() {
  SceneSpec s;
  s.width = 128;
  s.height = 128;
  s.background_depth = 4.0;
  s.background.texture = Texture::sine;
  s.background.texture_period = 16;
  s.background.texture_contrast = 0.3;
  Sprite sp;
  sp.depth = 2.0;
  sp.x = 52;
  sp.y = 64;
  sp.half_width = sp.half_height = 20;
  sp.vx = 2.0;
  s.sprites.push_back(sp);
  const auto b = simulate_bundle(s, SensorConfig::make({20e6}, 1));
  OptimConfig cfg;
  cfg.iterations = 500;
  cfg.pyramid = true;
  const auto trace = optimize_flows(b, LossWeights{}, cfg);
  const auto& start = trace.reports.front();
  const double ratio = trace.best.tof / start.tof;
  return {!trace.diverged && ratio <= 0.2 && trace.best.photo < start.photo,
          "L_ToF " + fmt("%.4g", start.tof) + " -> " + fmt("%.4g", trace.best.tof) + " (ratio " + fmt("%.3f", ratio) +
              "), L_photo " + fmt("%.4g", start.photo) + " -> " + fmt("%.4g", trace.best.photo)};
}

// --- 7 ---------------------------------------------------------------------------

Outcome true_flow_sanity() {
  bool pass = true;
  std::string detail;
  for (int taps : {1, 2}) {
    SceneSpec s;
    s.width = 64;
    s.height = 48;
    s.background.texture = Texture::checker;
    s.background.texture_period = 6;
    s.camera_vx = 1.0;
    s.camera_vy = -1.0;
    Sprite sp;
    sp.depth = 1.5;
    sp.x = 30;
    sp.y = 24;
    sp.half_width = 8;
    sp.half_height = 6;
    sp.vx = 2.0;
    sp.look.texture = Texture::stripes;
    sp.look.texture_period = 4;
    s.sprites.push_back(sp);
    const auto cfg = SensorConfig::make({20e6, 50e6}, taps);
    const auto b = simulate_bundle(s, cfg);
    auto problem = make_flow_problem(b);
    problem.region = b.visibility;
    const auto ev = total_loss(problem, b.true_flows, LossWeights{});

    // The sprite stays inside the frame, so only the camera pan leaves the
    // raster: the largest time offset D masks D columns on the left and D rows
    // at the bottom.
    int lag = 0;
    for (int t = 0; t < cfg.timestep_count(); ++t) lag = std::max(lag, std::abs(t - cfg.reference_timestep));
    const int masked = lag * s.height + lag * s.width - lag * lag;
    const double expected = static_cast<double>(masked) / (s.width * s.height);
    const double range = d_max(20e6);
    const bool ok = ev.report.tof < 1e-3 * range && ev.report.masked_fraction == expected;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + std::to_string(taps) + "-tap L_ToF " +
              fmt("%.3g", ev.report.tof / range) + " d_max, masked " + fmt("%.6f", ev.report.masked_fraction) +
              " vs " + std::to_string(masked) + "/" + std::to_string(s.width * s.height);
  }
  return {pass, detail};
}

// --- 8 ---------------------------------------------------------------------------

Mask edge_map(const Image& m, const Mask* valid) {
  Image g(m.width(), m.height());
  std::vector<double> vals;
  for (int y = 0; y + 1 < m.height(); ++y)
    for (int x = 0; x + 1 < m.width(); ++x) {
      if (valid && !((*valid)(x, y) && (*valid)(x + 1, y) && (*valid)(x, y + 1))) continue;
      g(x, y) = std::hypot(m(x + 1, y) - m(x, y), m(x, y + 1) - m(x, y));
      vals.push_back(g(x, y));
    }
  std::sort(vals.begin(), vals.end());
  const double threshold = vals[static_cast<std::size_t>(0.95 * static_cast<double>(vals.size() - 1))];
  Mask e(m.width(), m.height());
  for (std::size_t i = 0; i < g.size(); ++i) e[i] = (g[i] > threshold && g[i] > 0.0) ? 1 : 0;
  return e;
}

Outcome regularizers() {
  SceneSpec s;
  s.width = s.height = 96;
  s.background_depth = 4.0;
  Sprite sp;
  sp.depth = 2.0;
  sp.x = 42;
  sp.y = 48;
  sp.half_width = sp.half_height = 16;
  sp.vx = 2.0;
  s.sprites.push_back(sp);
  const auto b = simulate_bundle(s, SensorConfig::make({20e6}, 1));
  const auto problem = make_flow_problem(b);
  const int ref = problem.config.reference_timestep;
  OptimConfig cfg;
  cfg.iterations = 500;
  cfg.pyramid = true;

  auto flow_variance = [&](const LossWeights& w) {
    const auto trace = optimize_flows(problem, w, cfg);
    double total = 0.0;
    for (int t = 0; t < problem.config.timestep_count(); ++t) {
      if (t == ref) continue;
      const auto& f = trace.flows[static_cast<std::size_t>(t)];
      double n = 0, su = 0, sv = 0, suu = 0, svv = 0;
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          if (s.surface_at(x, y, ref) < 0) continue;
          const double uu = f.u(x, y), vv = f.v(x, y);
          n += 1;
          su += uu;
          sv += vv;
          suu += uu * uu;
          svv += vv * vv;
        }
      total += (suu / n - (su / n) * (su / n)) + (svv / n - (sv / n) * (sv / n));
    }
    return total / (problem.config.timestep_count() - 1);
  };
  auto edge_overlap = [&](const LossWeights& w) {
    const auto trace = optimize_flows(problem, w, cfg);
    const auto ev = total_loss(problem, trace.flows, w);
    const auto ref_edges = edge_map(problem.moving[problem.reference_capture()], nullptr);
    double iou = 0.0;
    int n = 0;
    for (std::size_t c = 0; c < problem.moving.size(); ++c) {
      if (problem.config.timestep_layout[c] == ref) continue;
      iou += mask_iou(edge_map(ev.warped[c], &ev.masks[c]), ref_edges);
      ++n;
    }
    return iou / n;
  };

  LossWeights rough, smooth;
  rough.smooth = 0.0;
  const double var0 = flow_variance(rough), var1 = flow_variance(smooth);
  LossWeights plain, edged;
  plain.edge = 0.0;
  plain.shift = edged.shift = 1.0;
  edged.edge = 1.0;
  const double iou0 = edge_overlap(plain), iou1 = edge_overlap(edged);
  return {var1 < var0 && iou1 > iou0, "flow variance " + fmt("%.4f", var0) + " (smooth 0) vs " + fmt("%.4f", var1) +
                                          " (smooth 1); edge IoU " + fmt("%.4f", iou0) + " (edge 0) vs " +
                                          fmt("%.4f", iou1) + " (edge 1, s=1)"};
}

// --- 9 ---------------------------------------------------------------------------

Outcome cli_determinism() {
  const auto dir = scratch("rerun");
  std::ofstream(dir / "scene.json") << R"({"width": 48, "height": 40,
    "background": {"depth": 4.0, "texture": "sine", "texture_period": 12, "texture_contrast": 0.3},
    "camera_velocity": [0.5, 0],
    "sprites": [{"shape": "disk", "depth": 2.0, "center": [20, 20], "radius": 8, "velocity": [1.5, 0.5]}]})";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"simulate", "simulate scene.json --frequencies 20e6,50e6 --taps 2 --noise 0.002 --seed 3 -o s"},
      {"reconstruct", "reconstruct s_moving.raw --gt s_depth.raw -o d.raw"},
      {"optimize", "optimize s --iters 40 --pyramid --seed 3 -o o"},
      {"toy", "toy --width 32 --height 32 --iters 300 --seed 3 -o t"},
      {"gradcheck", "gradcheck --trials 3 --seed 3 -o g"},
  };
  const char* prefixes[] = {"s", "d", "o", "t", "g"};
  int reproduced = 0;
  std::string failed;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const bool ok = run_cli(dir, runs[k].second) == 0 &&
                    run_cli(dir, std::string("rerun ") + prefixes[k] + "_manifest.json -o re_" + prefixes[k]) == 0;
    reproduced += ok ? 1 : 0;
    if (!ok) failed += " " + runs[k].first;
  }
  return {reproduced == static_cast<int>(runs.size()),
          std::to_string(reproduced) + "/" + std::to_string(runs.size()) + " commands byte-identical on rerun" +
              (failed.empty() ? "" : "; failed:" + failed)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double time_limit;  // seconds; 0 = none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"depth round trip", 10, depth_round_trip},
      {"phase-unwrap toy", 60, phase_unwrap_toy},
      {"gradient suite", 120, gradient_suite},
      {"unwrapped-loss equivalence", 0, unwrapped_equivalence},
      {"affine invariance", 0, affine_invariance},
      {"weakly-supervised flow recovery", 300, flow_recovery},
      {"true-flow sanity", 0, true_flow_sanity},
      {"regularizer behavior", 0, regularizers},
      {"CLI determinism", 0, cli_determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto& c = criteria[k];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit <= 0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %zu %s: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", k + 1, c.name, o.detail.c_str(), secs,
                c.time_limit > 0 ? (in_time ? fmt(" < %.0f s", c.time_limit) : fmt(" over %.0f s limit", c.time_limit)).c_str()
                                 : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
