#pragma once

// Finite-difference verification of every hand-written gradient.
//
// Each registered op draws random inputs that keep a margin from its
// non-differentiable set (zero residuals, the phase-unwrap boundary, the
// arctan2 branch cut, integer sampling coordinates, zero norms), evaluates
// the analytic gradient of a scalar objective, and compares it against
// central differences with step 1e-4. The error of a trial is
// max_k |analytic_k - numeric_k| / max_k |numeric_k|.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "itofflow/losses.hpp"
#include "itofflow/sim.hpp"
#include "itofflow/warp.hpp"

namespace itof {

struct GradcheckEntry {
  std::string op;
  int trials = 0;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

namespace gradcheck_detail {

inline constexpr double kStep = 1e-4;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Image random_image(Rng& rng, int w, int h, double lo = -1.0, double hi = 1.0) {
  Image m(w, h);
  for (double& v : m) v = uniform(rng, lo, hi);
  return m;
}

/// Ramp a*x + b*y plus bounded noise: every forward difference stays at
/// least min(|a|, |b|) - 2 * noise away from zero.
inline Image ramp_image(Rng& rng, int w, int h, double noise = 0.1) {
  const double a = uniform(rng, 0.5, 1.5) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
  const double b = uniform(rng, 0.5, 1.5) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
  Image m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(x, y) = a * x + b * y + uniform(rng, -noise, noise);
  return m;
}

/// Flow whose sample points x + V stay inside the raster with fractional
/// parts in [0.05, 0.95].
inline FlowField interior_flow(Rng& rng, int w, int h) {
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = std::floor(uniform(rng, 0.0, w - 1.0)) + uniform(rng, 0.05, 0.95);
      const double sy = std::floor(uniform(rng, 0.0, h - 1.0)) + uniform(rng, 0.05, 0.95);
      f.u(x, y) = std::min(sx, w - 1.05) - x;
      f.v(x, y) = std::min(sy, h - 1.05) - y;
    }
  return f;
}

/// Moves a sampling coordinate off the neighborhood of an integer.
inline double nudge_fraction(double s) {
  const double f = s - std::floor(s);
  if (f < 0.05) return s + 0.1;
  if (f > 0.95) return s - 0.1;
  return s;
}

/// Compares an analytic gradient against central differences of `objective`
/// over the given parameter rasters.
inline double compare(const std::function<double()>& objective, const std::vector<Image*>& params,
                      const std::vector<Image>& analytic) {
  double max_diff = 0.0, max_num = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Image& x = *params[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + kStep;
      const double fp = objective();
      x[i] = saved - kStep;
      const double fm = objective();
      x[i] = saved;
      const double num = (fp - fm) / (2.0 * kStep);
      max_diff = std::max(max_diff, std::abs(num - analytic[p][i]));
      max_num = std::max(max_num, std::abs(num));
    }
  }
  return max_diff / std::max(max_num, 1e-300);
}

inline double trial_photo(Rng& rng) {
  const int w = 5, h = 4;
  std::vector<Image> warped, target;
  std::vector<Mask> masks;
  for (int f = 0; f < 2; ++f) {
    Image a = random_image(rng, w, h), b(w, h);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double r = uniform(rng, 0.05, 1.0) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
      b[i] = a[i] - r;
    }
    Mask m = full_mask(w, h);
    m[static_cast<std::size_t>(uniform(rng, 0, static_cast<double>(m.size())))] = 0;
    warped.push_back(std::move(a));
    target.push_back(std::move(b));
    masks.push_back(std::move(m));
  }
  const auto lv = loss_photo(warped, target, masks);
  return compare([&] { return loss_photo(warped, target, masks).value; }, {&warped[0], &warped[1]}, lv.gradients);
}

/// Resamples each pixel until it keeps a margin from every non-smooth set of
/// the ToF loss.
inline double trial_tof(Rng& rng, bool unwrap) {
  const int w = 4, h = 4;
  const double f = std::vector<double>{20e6, 50e6, 70e6}[static_cast<std::size_t>(uniform(rng, 0, 3))];
  const double range = d_max(f);
  const double eps = PhysicalConstants::default_epsilon;
  std::vector<Image> m(4, Image(w, h));
  DepthImage label{f, Image(w, h), full_mask(w, h)};
  for (std::size_t i = 0; i < label.values.size(); ++i) {
    for (;;) {
      double s[4];
      for (double& v : s) v = uniform(rng, -1.0, 1.0);
      const double x = s[0] - s[2], y = s[3] - s[1];
      const double phi = wrapped_phase(x, y, eps);
      const double lab = uniform(rng, 0.0, range);
      const double e = std::abs(phi / kTwoPi * range - lab);
      if (std::abs(x) < 0.1 || phi < 0.05 || phi > kTwoPi - 0.05) continue;
      if (e < 0.02 * range || std::abs(e - 0.5 * range) < 0.02 * range || e > 0.98 * range) continue;
      for (int k = 0; k < 4; ++k) m[k][i] = s[k];
      label.values[i] = lab;
      break;
    }
  }
  Mask mask = full_mask(w, h);
  mask[3] = 0;
  const auto lv = loss_tof(m, label, eps, &mask, unwrap);
  return compare([&] { return loss_tof(m, label, eps, &mask, unwrap).value; }, {&m[0], &m[1], &m[2], &m[3]},
                 lv.gradients);
}

inline double trial_smooth(Rng& rng) {
  const int w = 5, h = 4;
  FlowField flow(ramp_image(rng, w, h), ramp_image(rng, w, h));
  const Image m = random_image(rng, w, h);
  const double lambda = uniform(rng, 0.5, 10.0);
  const auto lv = loss_smooth(flow, m, lambda);
  return compare([&] { return loss_smooth(flow, m, lambda).value; }, {&flow.u, &flow.v}, lv.gradients);
}

inline double trial_edge(Rng& rng) {
  const int w = 5, h = 4;
  Image warped = ramp_image(rng, w, h);
  const Image reference = random_image(rng, w, h);
  const double shift = std::vector<double>{0.1, 1.0, 100.0}[static_cast<std::size_t>(uniform(rng, 0, 3))];
  const double eps = 1e-3;
  Mask mask = full_mask(w, h);
  mask[static_cast<std::size_t>(uniform(rng, 0, static_cast<double>(mask.size())))] = 0;
  const auto lv = loss_edge(warped, reference, eps, shift, &mask);
  return compare([&] { return loss_edge(warped, reference, eps, shift, &mask).value; }, {&warped}, lv.gradients);
}

inline double trial_sim(Rng& rng, SimilarityMeasure measure) {
  const int w = 4, h = 3, channels = 3, stacks = 3;
  std::vector<FeatureStack> feats(stacks, FeatureStack(channels, Image(w, h)));
  for (std::size_t p = 0; p < static_cast<std::size_t>(w * h); ++p) {
    for (;;) {
      for (auto& st : feats)
        for (auto& c : st) c[p] = uniform(rng, -1.0, 1.0);
      bool ok = true;
      for (int i = 0; i < stacks && ok; ++i) {
        double n2 = 0.0;
        for (int c = 0; c < channels; ++c) n2 += feats[i][c][p] * feats[i][c][p];
        ok = std::sqrt(n2) > 0.1;
        for (int j = 0; j < stacks && ok; ++j) {
          if (i == j) continue;
          double d2 = 0.0;
          for (int c = 0; c < channels; ++c) {
            const double d = feats[i][c][p] - feats[j][c][p];
            d2 += d * d;
            if (measure == SimilarityMeasure::l1 && std::abs(d) < 0.05) ok = false;
          }
          if (std::sqrt(d2) < 0.1) ok = false;
        }
      }
      if (ok) break;
    }
  }
  const auto lv = loss_sim(feats, measure);
  std::vector<Image*> params;
  for (auto& st : feats)
    for (auto& c : st) params.push_back(&c);
  return compare([&] { return loss_sim(feats, measure).value; }, params, lv.gradients);
}

inline double trial_warp(Rng& rng, bool wrt_flow) {
  const int w = 6, h = 5;
  Image m = random_image(rng, w, h);
  FlowField flow = interior_flow(rng, w, h);
  const Image cot = random_image(rng, w, h);
  auto objective = [&] {
    const auto r = warp(m, flow);
    double s = 0.0;
    for (std::size_t i = 0; i < r.warped.size(); ++i) s += cot[i] * r.warped[i];
    return s;
  };
  const auto r = warp(m, flow);
  if (wrt_flow) {
    const auto g = r.vjp_flow(cot);
    return compare(objective, {&flow.u, &flow.v}, {g.u, g.v});
  }
  return compare(objective, {&m}, {r.vjp_image(cot)});
}

/// Full objective chained through the warps into the flows, on a tiny SF
/// single-tap problem. Trials whose evaluation point sits near a non-smooth
/// set are redrawn; the number of redraws is bounded.
inline double trial_total(Rng& rng) {
  const int w = 6, h = 5;
  const double f = 20e6;
  const double range = d_max(f);
  const auto cfg = SensorConfig::make({f}, 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    FlowProblem p;
    p.config = cfg;
    // Smooth phase and amplitude fields keep each warped quadruple close to a
    // consistent measurement.
    const double phase0 = uniform(rng, 1.0, 5.0);
    for (int k = 0; k < 4; ++k) {
      Image m(w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double phi = phase0 + 0.08 * x - 0.05 * y + uniform(rng, -0.05, 0.05);
          const double amp = 1.0 + 0.3 * std::sin(0.9 * x + 0.4 * y + k) + uniform(rng, -0.05, 0.05);
          // The common ramp cancels in m0 - m2 and m3 - m1 but keeps
          // neighboring samples apart.
          m(x, y) = 0.2 * k + amp * std::cos(phi + k * kPi / 2) + 0.6 * x + 0.45 * y;
        }
      p.moving.push_back(m);
      for (double& v : m) v -= 2.0;
      p.targets.push_back(m);
    }
    DepthImage label{f, Image(w, h), full_mask(w, h)};
    for (double& v : label.values) v = wrap_depth(phase0 / kTwoPi * range + uniform(rng, -1.0, 1.0), f);
    p.labels = {label};
    std::vector<FlowField> flows(4, FlowField(w, h));
    for (int t = 0; t < 3; ++t) {
      // Contraction towards the center plus shear: samples stay inside the
      // raster, distinct, and neighboring flow vectors differ.
      const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double sx = cx + 0.8 * (x - cx) + 0.05 * (y - cy) + uniform(rng, -0.02, 0.02);
          const double sy = cy + 0.8 * (y - cy) + 0.06 * (x - cx) + uniform(rng, -0.02, 0.02);
          flows[t].u(x, y) = nudge_fraction(sx) - x;
          flows[t].v(x, y) = nudge_fraction(sy) - y;
        }
    }
    LossWeights weights;
    weights.sim = 0.0;
    weights.photo = 0.5;
    weights.edge = 1.0;
    weights.shift = 1.0;
    weights.edge_lambda = 2.0;

    // Margins: sampling coordinates, flow differences, warped differences,
    // ToF error and arctan2 geometry.
    bool ok = true;
    const auto ev = total_loss(p, flows, weights);
    for (int t = 0; t < 3 && ok; ++t)
      for (int y = 0; y < h && ok; ++y)
        for (int x = 0; x < w && ok; ++x) {
          const double sx = x + flows[t].u(x, y), sy = y + flows[t].v(x, y);
          const double fx = sx - std::floor(sx), fy = sy - std::floor(sy);
          ok = fx > 2e-3 && fx < 1 - 2e-3 && fy > 2e-3 && fy < 1 - 2e-3;
          const double flow_gap = 2e-3, value_gap = 5e-3;
          if (x + 1 < w) ok = ok && std::abs(flows[t].u(x + 1, y) - flows[t].u(x, y)) > flow_gap &&
                              std::abs(flows[t].v(x + 1, y) - flows[t].v(x, y)) > flow_gap &&
                              std::abs(ev.warped[t](x + 1, y) - ev.warped[t](x, y)) > value_gap;
          if (y + 1 < h) ok = ok && std::abs(flows[t].u(x, y + 1) - flows[t].u(x, y)) > flow_gap &&
                              std::abs(flows[t].v(x, y + 1) - flows[t].v(x, y)) > flow_gap &&
                              std::abs(ev.warped[t](x, y + 1) - ev.warped[t](x, y)) > value_gap;
          ok = ok && std::abs(ev.warped[t](x, y) - p.targets[t](x, y)) > value_gap;
        }
    for (std::size_t i = 0; i < label.values.size() && ok; ++i) {
      const double x = ev.warped[0][i] - ev.warped[2][i], y = ev.warped[3][i] - ev.warped[1][i];
      const double phi = wrapped_phase(x, y, p.epsilon);
      const double e = std::abs(phi / kTwoPi * range - label.values[i]);
      ok = std::abs(x) > 0.05 && std::hypot(x, y) > 0.1 && phi > 5e-3 && phi < kTwoPi - 5e-3 &&
           std::abs(e - 0.5 * range) > 5e-3 * range && std::abs(e - range) > 5e-3 * range && e > 5e-3 * range;
    }
    if (!ok) continue;

    std::vector<Image*> params;
    std::vector<Image> analytic;
    for (int t = 0; t < 3; ++t) {
      params.push_back(&flows[t].u);
      params.push_back(&flows[t].v);
      analytic.push_back(ev.flow_gradients[t].u);
      analytic.push_back(ev.flow_gradients[t].v);
    }
    return compare([&] { return total_loss(p, flows, weights).report.total; }, params, analytic);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace gradcheck_detail

struct GradcheckOp {
  std::string name;
  double threshold;
  std::function<double(std::mt19937_64&)> trial;
};

/// Every differentiable op with its acceptance threshold. Piecewise-linear
/// (and bilinear) objectives are held to 1e-6; smooth ones to 1e-4.
inline const std::vector<GradcheckOp>& gradcheck_registry() {
  using namespace gradcheck_detail;
  static const std::vector<GradcheckOp> ops = {
      {"loss_photo", 1e-6, [](Rng& r) { return trial_photo(r); }},
      {"loss_tof", 1e-4, [](Rng& r) { return trial_tof(r, false); }},
      {"loss_tof_unwrapped", 1e-4, [](Rng& r) { return trial_tof(r, true); }},
      {"loss_smooth", 1e-6, [](Rng& r) { return trial_smooth(r); }},
      {"loss_edge", 1e-4, [](Rng& r) { return trial_edge(r); }},
      {"loss_sim_l1", 1e-6, [](Rng& r) { return trial_sim(r, SimilarityMeasure::l1); }},
      {"loss_sim_l2", 1e-4, [](Rng& r) { return trial_sim(r, SimilarityMeasure::l2); }},
      {"loss_sim_cost", 1e-6, [](Rng& r) { return trial_sim(r, SimilarityMeasure::cost); }},
      {"loss_sim_cosine", 1e-4, [](Rng& r) { return trial_sim(r, SimilarityMeasure::cosine); }},
      {"warp_vjp_image", 1e-4, [](Rng& r) { return trial_warp(r, false); }},
      {"warp_vjp_flow", 1e-4, [](Rng& r) { return trial_warp(r, true); }},
      {"total_loss_flows", 1e-4, [](Rng& r) { return trial_total(r); }},
  };
  return ops;
}

/// Runs `trials` random trials of one op. Failures are reported, not thrown.
inline GradcheckEntry gradcheck(const GradcheckOp& op, int trials, std::uint64_t seed) {
  GradcheckEntry e{op.name, 0, 0.0, op.threshold, false};
  // Each op gets its own stream so adding ops never perturbs the others.
  std::uint64_t stream = 0;
  for (char c : op.name) stream = stream * 131 + static_cast<unsigned char>(c);
  auto rng = stream_rng(seed, stream);
  for (int t = 0; t < trials; ++t) {
    const double err = op.trial(rng);
    e.max_rel_error = std::max(e.max_rel_error, std::isfinite(err) ? err : std::numeric_limits<double>::infinity());
    ++e.trials;
  }
  e.passed = e.trials > 0 && e.max_rel_error < e.threshold;
  return e;
}

inline GradcheckEntry gradcheck(const std::string& name, int trials, std::uint64_t seed) {
  for (const auto& op : gradcheck_registry())
    if (op.name == name) return gradcheck(op, trials, seed);
  throw DomainError("unknown gradcheck op: " + name);
}

inline std::vector<GradcheckEntry> gradcheck_all(int trials, std::uint64_t seed) {
  std::vector<GradcheckEntry> out;
  for (const auto& op : gradcheck_registry()) out.push_back(gradcheck(op, trials, seed));
  return out;
}

}  // namespace itof
