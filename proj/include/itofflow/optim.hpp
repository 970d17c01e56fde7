#pragma once

// First-order drivers: direct variational fitting of per-timestep flow
// fields under the weakly-supervised objective, and the single-variable
// m3 reconstruction experiment that exposes arctan2 branch behavior.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "itofflow/losses.hpp"
#include "itofflow/sim.hpp"

namespace itof {

enum class OptimMethod { gd, adam };

struct OptimConfig {
  OptimMethod method = OptimMethod::adam;
  double step = 0.05;
  int iterations = 500;
  /// Stop once |total(k) - total(k-1)| falls below this; 0 disables.
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  bool unwrap = true;
  bool pyramid = false;
  int pyramid_levels = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (!(step > 0.0)) throw DomainError("step size must be positive");
    if (iterations < 0) throw DomainError("iteration budget must be non-negative");
    if (pyramid_levels < 1) throw DomainError("pyramid needs at least one level");
  }
};

struct Trace {
  std::vector<LossReport> reports;
  std::vector<FlowField> flows;  // best iterate, per timestep
  LossReport best;
  bool converged = false;
  bool diverged = false;
  std::string diagnostic;
};

namespace detail {

/// Adam / plain gradient step on a list of flow fields.
class FlowStepper {
public:
  FlowStepper(const OptimConfig& cfg, int count, int width, int height) : cfg_(cfg) {
    for (int i = 0; i < count; ++i) {
      m1_.emplace_back(width, height);
      m2_.emplace_back(width, height);
    }
  }

  void step(std::vector<FlowField>& flows, const std::vector<FlowField>& grads, int skip) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < flows.size(); ++k) {
      if (static_cast<int>(k) == skip) continue;
      update(flows[k].u, grads[k].u, m1_[k].u, m2_[k].u, c1, c2);
      update(flows[k].v, grads[k].v, m1_[k].v, m2_[k].v, c1, c2);
    }
  }

private:
  void update(Image& x, const Image& g, Image& m, Image& v, double c1, double c2) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (cfg_.method == OptimMethod::gd) {
        x[i] -= cfg_.step * g[i];
        continue;
      }
      m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g[i] * g[i];
      x[i] -= cfg_.step * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.adam_epsilon);
    }
  }

  const OptimConfig& cfg_;
  std::vector<FlowField> m1_, m2_;
  int t_ = 0;
};

inline bool finite_report(const LossReport& r) {
  return std::isfinite(r.total) && std::isfinite(r.tof) && std::isfinite(r.smooth) && std::isfinite(r.edge);
}

inline FlowProblem downsample_problem(const FlowProblem& p) {
  FlowProblem q;
  q.config = p.config;
  q.epsilon = p.epsilon;
  for (const auto& m : p.moving) q.moving.push_back(downsample2(m));
  for (const auto& m : p.targets) q.targets.push_back(downsample2(m));
  // Labels come from the averaged static captures, so mixed pixels keep a
  // depth consistent with the coarse measurements.
  for (std::size_t fi = 0; fi < q.config.frequency_count(); ++fi) {
    const auto* m = &q.targets[4 * fi];
    q.labels.push_back(reconstruct_depth(m[0], m[1], m[2], m[3], q.config.frequencies_hz[fi], 0.0));
  }
  for (const auto& r : p.region) q.region.push_back(downsample2(r));
  return q;
}

}  // namespace detail

struct FlowFitOptions {
  /// Optional starting point (per timestep); zero flows when empty.
  std::vector<FlowField> initial;
};

/// Descends total_loss over one flow field per non-reference timestep.
/// Returns the best iterate seen at full resolution; the zero-flow (or given
/// initial) iterate is always a candidate, so the result never has a higher
/// loss than the start.
inline Trace optimize_flows(const FlowProblem& problem, LossWeights weights, const OptimConfig& cfg,
                            const FlowFitOptions& opts = {}) {
  cfg.validate();
  weights.validate();
  weights.sim = 0.0;  // similarity acts on static captures only
  const int nt = problem.config.timestep_count();
  const int ref = problem.config.reference_timestep;

  Trace trace;
  auto zero_flows = [&](int w, int h) {
    std::vector<FlowField> f;
    for (int t = 0; t < nt; ++t) f.emplace_back(w, h);
    return f;
  };
  std::vector<FlowField> flows = opts.initial.empty() ? zero_flows(problem.width(), problem.height()) : opts.initial;
  if (flows.size() != static_cast<std::size_t>(nt)) throw ShapeError("optimize_flows: need one initial flow per timestep");
  trace.flows = flows;
  if (cfg.iterations == 0) return trace;

  int iteration = 0;
  auto record = [&](const LossReport& r) {
    trace.reports.push_back(r);
    trace.reports.back().iteration = iteration++;
  };

  // Baseline at full resolution.
  auto ev0 = total_loss(problem, flows, weights, cfg.unwrap);
  record(ev0.report);
  trace.best = trace.reports.back();
  if (!detail::finite_report(ev0.report)) {
    trace.diverged = true;
    trace.diagnostic = "non-finite loss at the initial iterate";
    return trace;
  }
  if (cfg.iterations == 1) return trace;

  // Coarse-to-fine: coarse levels each take a quarter of the remaining budget.
  const int levels = cfg.pyramid ? cfg.pyramid_levels : 1;
  std::vector<FlowProblem> pyramid{problem};
  for (int l = 1; l < levels; ++l) {
    if (pyramid.back().width() < 8 || pyramid.back().height() < 8) break;
    pyramid.push_back(detail::downsample_problem(pyramid.back()));
  }
  int remaining = cfg.iterations - 1;
  std::vector<FlowField> current = flows;
  if (pyramid.size() > 1) {
    const int coarse_budget = remaining / 4;
    // Restrict the starting flows to the coarsest level.
    for (std::size_t l = 1; l < pyramid.size(); ++l)
      for (auto& f : current) f = FlowField(downsample2(f.u), downsample2(f.v));
    for (std::size_t l = 0; l < current.size(); ++l) {
      for (double& v : current[l].u) v *= 1.0 / std::pow(2.0, pyramid.size() - 1);
      for (double& v : current[l].v) v *= 1.0 / std::pow(2.0, pyramid.size() - 1);
    }
    for (std::size_t l = pyramid.size() - 1; l >= 1; --l) {
      const FlowProblem& lp = pyramid[l];
      detail::FlowStepper stepper(cfg, nt, lp.width(), lp.height());
      for (int k = 0; k < coarse_budget; ++k) {
        auto ev = total_loss(lp, current, weights, cfg.unwrap);
        record(ev.report);
        --remaining;
        if (!detail::finite_report(ev.report)) {
          trace.diverged = true;
          trace.diagnostic = "non-finite loss at pyramid level " + std::to_string(l);
          return trace;
        }
        stepper.step(current, ev.flow_gradients, ref);
      }
      const FlowProblem& finer = pyramid[l - 1];
      for (auto& f : current)
        f = FlowField(upsample_to(f.u, finer.width(), finer.height(), 2.0),
                      upsample_to(f.v, finer.width(), finer.height(), 2.0));
    }
  }

  detail::FlowStepper stepper(cfg, nt, problem.width(), problem.height());
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k < remaining; ++k) {
    auto ev = total_loss(problem, current, weights, cfg.unwrap);
    record(ev.report);
    if (!detail::finite_report(ev.report)) {
      trace.diverged = true;
      trace.diagnostic = "non-finite loss at iteration " + std::to_string(trace.reports.back().iteration);
      return trace;
    }
    if (ev.report.total < trace.best.total) {
      trace.best = trace.reports.back();
      trace.flows = current;
    }
    if (cfg.tolerance > 0.0 && std::abs(previous - ev.report.total) < cfg.tolerance) {
      trace.converged = true;
      break;
    }
    previous = ev.report.total;
    if (k + 1 < remaining) stepper.step(current, ev.flow_gradients, ref);
  }
  return trace;
}

inline Trace optimize_flows(const CaptureBundle& bundle, const LossWeights& weights, const OptimConfig& cfg) {
  return optimize_flows(make_flow_problem(bundle), weights, cfg);
}

// --- m3 reconstruction experiment -------------------------------------------

struct ToyResult {
  Image m3;         // reconstruction
  Image error;      // per-pixel circular depth error, meters
  Trace trace;      // mean unwrapped loss per iteration in report.tof / total
  double converged_fraction = 0.0;
};

/// Circular distance between two wrapped depths.
inline double circular_depth_error(double a, double b, double range) {
  const double e = std::abs(a - b);
  return std::min(e, range - e);
}

/// Reconstructs m3 from m0, m1, m2 and a wrapped depth label by per-pixel
/// gradient descent on the ToF loss, starting from m3 = 0.
///
/// Pixels are independent problems, each stepping along its own gradient with
/// a step that halves whenever a trial step fails to lower its loss (the step
/// is rejected) and grows by 20% after an accepted one, capped at 64x the
/// configured step. A pixel counts as converged once its circular depth
/// error drops below `converge_tol * d_max`.
inline ToyResult toy_reconstruct_m3(const Image& m0, const Image& m1, const Image& m2, const DepthImage& label,
                                    const OptimConfig& cfg, double epsilon = PhysicalConstants::default_epsilon,
                                    double converge_tol = 1e-3, const Image* initial = nullptr) {
  cfg.validate();
  require_same_shape(m0, m1, "toy_reconstruct_m3");
  require_same_shape(m0, m2, "toy_reconstruct_m3");
  require_same_shape(m0, label.values, "toy_reconstruct_m3");
  const double f = label.frequency_hz;
  const double range = d_max(f);
  const double k = depth_per_radian(f);
  const std::size_t n = m0.size();

  ToyResult res;
  res.m3 = initial ? *initial : Image(m0.width(), m0.height(), 0.0);
  Image step(m0.width(), m0.height(), cfg.step);
  const double max_step = 64.0 * cfg.step;

  auto pixel_loss = [&](std::size_t i, double m3) {
    const double d = reconstruct_pixel(m0[i], m1[i], m2[i], m3, f, epsilon);
    return tof_pixel_error(d, label.values[i], range, cfg.unwrap);
  };
  auto pixel_grad = [&](std::size_t i, double m3) {
    const double x = m0[i] - m2[i];
    const double xs = x + stabilizer_sign(x) * epsilon;
    const double y = m3 - m1[i];
    const double d = reconstruct_pixel(m0[i], m1[i], m2[i], m3, f, epsilon);
    const double diff = d - label.values[i];
    double g = subgradient_sign(diff);
    if (cfg.unwrap && std::abs(diff) >= 0.5 * range) g = -g;
    return g * k * xs / (xs * xs + y * y);
  };

  std::vector<double> loss(n);
  for (std::size_t i = 0; i < n; ++i) loss[i] = pixel_loss(i, res.m3[i]);
  auto report = [&](int it) {
    LossReport r;
    r.iteration = it;
    double s = 0.0;
    for (double v : loss) s += v;
    r.tof = r.total = s / static_cast<double>(n);
    return r;
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    res.trace.reports.push_back(report(it));
    if (!std::isfinite(res.trace.reports.back().total)) {
      res.trace.diverged = true;
      res.trace.diagnostic = "non-finite loss at iteration " + std::to_string(it);
      break;
    }
    if (it + 1 == cfg.iterations) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (loss[i] == 0.0) continue;
      const double g = pixel_grad(i, res.m3[i]);
      if (g == 0.0 || !std::isfinite(g)) continue;
      const double trial = res.m3[i] - step[i] * g;
      const double trial_loss = pixel_loss(i, trial);
      if (trial_loss < loss[i]) {
        res.m3[i] = trial;
        loss[i] = trial_loss;
        step[i] = std::min(step[i] * 1.2, max_step);
      } else {
        step[i] *= 0.5;
      }
    }
  }
  res.trace.best = res.trace.reports.empty() ? report(0) : res.trace.reports.back();

  res.error = Image(m0.width(), m0.height());
  std::size_t converged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = reconstruct_pixel(m0[i], m1[i], m2[i], res.m3[i], f, epsilon);
    res.error[i] = circular_depth_error(d, label.values[i], range);
    if (res.error[i] < converge_tol * range) ++converged;
  }
  res.converged_fraction = n ? static_cast<double>(converged) / static_cast<double>(n) : 0.0;
  res.trace.converged = converged == n;
  return res;
}

/// Smooth synthetic phase field covering the full [0, 2 pi) range, with its
/// measurements under m = O + A cos(dphi + theta).
struct ToyProblem {
  double frequency_hz = 20e6;
  Image m0, m1, m2, m3;
  DepthImage label;
  /// 1 where starting from m3 = 0 lies on the same arctan2 branch as the target.
  Mask same_branch;
};

inline ToyProblem make_toy_problem(int width, int height, std::uint64_t seed, double frequency_hz = 20e6,
                                   double amplitude = 1.0, double offset = 1.0) {
  if (width <= 0 || height <= 0) throw DomainError("toy raster must be non-empty");
  auto rng = stream_rng(seed, 0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double phase0 = kTwoPi * uni(rng);
  const double tilt = 0.25 + 0.5 * uni(rng);
  const double wobble = 0.15 * uni(rng);
  const double wobble_freq = 1.0 + 2.0 * uni(rng);

  ToyProblem p;
  p.frequency_hz = frequency_hz;
  p.m0 = p.m1 = p.m2 = p.m3 = Image(width, height);
  p.label = {frequency_hz, Image(width, height), full_mask(width, height)};
  p.same_branch = Mask(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width, v = (y + 0.5) / height;
      // One full phase turn along x, tilted along y, with a smooth wobble.
      double phi = phase0 + kTwoPi * (u + tilt * v) + kTwoPi * wobble * std::sin(kTwoPi * wobble_freq * v);
      phi = std::fmod(phi, kTwoPi);
      if (phi < 0) phi += kTwoPi;
      const double ms[4] = {offset + amplitude * std::cos(phi), offset + amplitude * std::cos(phi + kPi / 2),
                            offset + amplitude * std::cos(phi + kPi), offset + amplitude * std::cos(phi + 1.5 * kPi)};
      p.m0(x, y) = ms[0];
      p.m1(x, y) = ms[1];
      p.m2(x, y) = ms[2];
      p.m3(x, y) = ms[3];
      p.label.values(x, y) = reconstruct_pixel(ms[0], ms[1], ms[2], ms[3], frequency_hz, 0.0);
      // With x = m0 - m2 > 0 the wrapped phase jumps where y = m3 - m1 changes
      // sign; for x < 0 the depth is continuous in m3.
      const double dx = ms[0] - ms[2];
      const double y_init = 0.0 - ms[1];
      const double y_true = ms[3] - ms[1];
      p.same_branch(x, y) = (dx < 0.0 || (y_init >= 0.0) == (y_true >= 0.0)) ? 1 : 0;
    }
  return p;
}

}  // namespace itof
