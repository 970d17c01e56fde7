#pragma once

// Loss functions for weakly-supervised flow estimation with analytic
// gradients. All losses are means (not sums) over their support, so the
// weights do not depend on image resolution.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itofflow/core.hpp"
#include "itofflow/warp.hpp"

namespace itof {

/// Scalar loss and its gradient, one raster per differentiable input.
struct LossValue {
  double value = 0.0;
  std::vector<Image> gradients;
  std::size_t count = 0;    // number of terms averaged
  bool all_masked = false;  // no valid pixel; value and gradients are zero
};

/// sign with sign(0) := 0 (subgradient convention for |.|).
inline double subgradient_sign(double x) noexcept { return (x > 0.0) - (x < 0.0); }

namespace detail {

inline const Mask* mask_or_null(std::span<const Mask> masks, std::size_t i) {
  return masks.empty() ? nullptr : &masks[i];
}

}  // namespace detail

/// Mean absolute residual over unmasked pixels of every frame.
inline LossValue loss_photo(std::span<const Image> warped, std::span<const Image> targets,
                            std::span<const Mask> masks = {}) {
  if (warped.size() != targets.size() || (!masks.empty() && masks.size() != warped.size()))
    throw ShapeError("loss_photo: frame count mismatch");
  LossValue out;
  for (std::size_t f = 0; f < warped.size(); ++f) {
    require_same_shape(warped[f], targets[f], "loss_photo");
    if (const Mask* m = detail::mask_or_null(masks, f)) require_same_shape(warped[f], *m, "loss_photo");
    out.gradients.emplace_back(warped[f].width(), warped[f].height());
  }
  double sum = 0.0;
  for (std::size_t f = 0; f < warped.size(); ++f) {
    const Mask* m = detail::mask_or_null(masks, f);
    for (std::size_t i = 0; i < warped[f].size(); ++i) {
      if (m && !(*m)[i]) continue;
      const double r = warped[f][i] - targets[f][i];
      sum += std::abs(r);
      out.gradients[f][i] = subgradient_sign(r);
      ++out.count;
    }
  }
  if (out.count == 0) {
    out.all_masked = true;
    return out;
  }
  const double inv = 1.0 / static_cast<double>(out.count);
  out.value = sum * inv;
  for (auto& g : out.gradients)
    for (double& v : g) v *= inv;
  return out;
}

// --- ToF depth loss --------------------------------------------------------

/// Unwrapped per-pixel error min_k |d_hat + k d_max - d_label| over the
/// candidates k in {-1, 0, 1}; both depths must lie in [0, d_max).
inline double unwrapped_error_min_form(double d_hat, double d_label, double range) {
  const double diff = d_hat - d_label;
  return std::min({std::abs(diff - range), std::abs(diff), std::abs(diff + range)});
}

/// Candidate index chosen by the lookup table on the raw difference
/// d_hat - d_label in (-d_max, d_max).
inline int unwrap_candidate(double diff, double range) {
  if (diff <= -0.5 * range) return 1;
  if (diff <= 0.5 * range) return 0;
  return -1;
}

/// Unwrapped per-pixel error via the lookup table.
inline double unwrapped_error_lookup(double d_hat, double d_label, double range) {
  const double diff = d_hat - d_label;
  return std::abs(diff + unwrap_candidate(diff, range) * range);
}

/// Per-pixel ToF error e = |d_hat - d_label|, or min(e, d_max - e) when unwrapping.
inline double tof_pixel_error(double d_hat, double d_label, double range, bool unwrap) {
  const double e = std::abs(d_hat - d_label);
  return unwrap ? std::min(e, range - e) : e;
}

/// Mean ToF depth error over unmasked pixels for one frequency group.
///
/// `m` holds the four (warped) phase samples m0..m3. Gradients chain through
/// the stabilized arctan2; with `unwrap` the per-pixel gradient is negated
/// wherever the wrapped error reaches d_max / 2.
inline LossValue loss_tof(std::span<const Image> m, const DepthImage& label, double epsilon,
                          const Mask* mask, bool unwrap) {
  if (m.size() != 4) throw ShapeError("loss_tof: expects exactly four phase samples");
  for (const auto& f : m) require_same_shape(f, label.values, "loss_tof");
  if (mask) require_same_shape(*mask, label.values, "loss_tof");
  const double range = d_max(label.frequency_hz);
  const double k = range / kTwoPi;

  LossValue out;
  for (int i = 0; i < 4; ++i) out.gradients.emplace_back(label.values.width(), label.values.height());
  double sum = 0.0;
  for (std::size_t i = 0; i < label.values.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    if (!label.valid_mask.empty() && !label.valid_mask[i]) continue;
    const double x = m[0][i] - m[2][i];
    const double y = m[3][i] - m[1][i];
    const double xs = x + stabilizer_sign(x) * epsilon;
    double d_hat = wrapped_phase(x, y, epsilon) * k;
    if (d_hat >= range) d_hat = 0.0;
    const double diff = d_hat - label.values[i];
    const double e = std::abs(diff);
    double g = subgradient_sign(diff);
    if (unwrap && e >= 0.5 * range) g = -g;
    sum += unwrap ? std::min(e, range - e) : e;
    ++out.count;
    const double r2 = xs * xs + y * y;
    if (g == 0.0 || r2 == 0.0) continue;
    const double dd_dx = -k * y / r2;
    const double dd_dy = k * xs / r2;
    out.gradients[0][i] = g * dd_dx;
    out.gradients[2][i] = -g * dd_dx;
    out.gradients[3][i] = g * dd_dy;
    out.gradients[1][i] = -g * dd_dy;
  }
  if (out.count == 0) {
    out.all_masked = true;
    return out;
  }
  const double inv = 1.0 / static_cast<double>(out.count);
  out.value = sum * inv;
  for (auto& gr : out.gradients)
    for (double& v : gr) v *= inv;
  return out;
}

// --- Regularizers ----------------------------------------------------------

/// Edge-aware flow smoothness: mean over flow components, both axes and all
/// forward-difference positions of exp(-lambda |dm/dx_j|) |dV/dx_j|.
/// The image is treated as a constant; gradients are {d/du, d/dv}.
inline LossValue loss_smooth(const FlowField& flow, const Image& m, double lambda) {
  require_same_shape(flow.u, m, "loss_smooth");
  require_same_shape(flow.v, m, "loss_smooth");
  const int w = m.width(), h = m.height();
  LossValue out;
  out.gradients = {Image(w, h), Image(w, h)};
  const std::array<const Image*, 2> comps{&flow.u, &flow.v};
  const std::size_t nx = static_cast<std::size_t>(std::max(w - 1, 0)) * h;
  const std::size_t ny = static_cast<std::size_t>(std::max(h - 1, 0)) * w;
  double total = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const std::size_t n = axis == 0 ? nx : ny;
    if (n == 0) continue;
    // 1 / (components * axes * positions)
    const double norm = 1.0 / (4.0 * static_cast<double>(n));
    const int dx = axis == 0 ? 1 : 0, dy = axis == 0 ? 0 : 1;
    for (int y = 0; y + dy < h; ++y)
      for (int x = 0; x + dx < w; ++x) {
        const std::size_t i = m.index(x, y), j = m.index(x + dx, y + dy);
        const double weight = std::exp(-lambda * std::abs(m[j] - m[i]));
        for (int c = 0; c < 2; ++c) {
          const double d = (*comps[c])[j] - (*comps[c])[i];
          total += norm * weight * std::abs(d);
          const double g = norm * weight * subgradient_sign(d);
          out.gradients[c][j] += g;
          out.gradients[c][i] -= g;
        }
      }
    out.count += 2 * n;
  }
  out.value = total;
  return out;
}

/// Edge-alignment loss: mean over axes and forward-difference positions of
/// exp(-1 / (eps + |dm_ref/dx_j|)) / (|dm_hat/dx_j| + shift).
/// Positions touching a masked pixel of m_hat are skipped. Gradient w.r.t. m_hat only.
inline LossValue loss_edge(const Image& warped, const Image& reference, double epsilon, double shift,
                           const Mask* mask = nullptr) {
  require_same_shape(warped, reference, "loss_edge");
  if (mask) require_same_shape(warped, *mask, "loss_edge");
  if (!(shift > 0.0)) throw DomainError("loss_edge: shift must be positive");
  const int w = warped.width(), h = warped.height();
  LossValue out;
  out.gradients = {Image(w, h)};
  double total = 0.0;
  int axes_used = 0;
  std::array<double, 2> axis_sum{0.0, 0.0};
  std::array<std::size_t, 2> axis_count{0, 0};
  for (int axis = 0; axis < 2; ++axis) {
    const int dx = axis == 0 ? 1 : 0, dy = axis == 0 ? 0 : 1;
    for (int y = 0; y + dy < h; ++y)
      for (int x = 0; x + dx < w; ++x) {
        const std::size_t i = warped.index(x, y), j = warped.index(x + dx, y + dy);
        if (mask && (!(*mask)[i] || !(*mask)[j])) continue;
        ++axis_count[axis];
      }
  }
  for (int axis = 0; axis < 2; ++axis) {
    if (axis_count[axis] == 0) continue;
    ++axes_used;
  }
  if (axes_used == 0) {
    out.all_masked = true;
    return out;
  }
  for (int axis = 0; axis < 2; ++axis) {
    if (axis_count[axis] == 0) continue;
    const double norm = 1.0 / (axes_used * static_cast<double>(axis_count[axis]));
    const int dx = axis == 0 ? 1 : 0, dy = axis == 0 ? 0 : 1;
    for (int y = 0; y + dy < h; ++y)
      for (int x = 0; x + dx < w; ++x) {
        const std::size_t i = warped.index(x, y), j = warped.index(x + dx, y + dy);
        if (mask && (!(*mask)[i] || !(*mask)[j])) continue;
        const double weight = std::exp(-1.0 / (epsilon + std::abs(reference[j] - reference[i])));
        const double d = warped[j] - warped[i];
        const double denom = std::abs(d) + shift;
        axis_sum[axis] += norm * weight / denom;
        const double g = -norm * weight * subgradient_sign(d) / (denom * denom);
        out.gradients[0][j] += g;
        out.gradients[0][i] -= g;
      }
    total += axis_sum[axis];
    out.count += axis_count[axis];
  }
  out.value = total;
  return out;
}

// --- Latent similarity -----------------------------------------------------

using FeatureStack = std::vector<Image>;  // channels, each H x W

enum class SimilarityMeasure { l1, l2, cost, cosine };

inline std::string to_string(SimilarityMeasure m) {
  switch (m) {
    case SimilarityMeasure::l1: return "l1";
    case SimilarityMeasure::l2: return "l2";
    case SimilarityMeasure::cost: return "cost";
    case SimilarityMeasure::cosine: return "cosine";
  }
  return "?";
}

/// Mean over ordered pairs i != j and positions of the measure applied to the
/// channel column vectors. Gradients are flattened stack-major:
/// gradients[i * channels + c]. Under cosine, positions where either column
/// has zero norm are skipped; under l2, zero differences get subgradient 0.
inline LossValue loss_sim(const std::vector<FeatureStack>& features, SimilarityMeasure measure) {
  if (features.size() < 2) throw DomainError("loss_sim needs at least two feature stacks");
  const std::size_t channels = features.front().size();
  if (channels == 0) throw ShapeError("loss_sim: empty feature stack");
  for (const auto& st : features) {
    if (st.size() != channels) throw ShapeError("loss_sim: channel count mismatch");
    for (const auto& c : st) require_same_shape(c, features.front().front(), "loss_sim");
  }
  const std::size_t n = features.size();
  const std::size_t pixels = features.front().front().size();
  const int w = features.front().front().width(), h = features.front().front().height();

  LossValue out;
  for (std::size_t i = 0; i < n * channels; ++i) out.gradients.emplace_back(w, h);
  std::vector<double> a(channels), b(channels);
  double sum = 0.0;

  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (std::size_t c = 0; c < channels; ++c) {
          a[c] = features[i][c][p];
          b[c] = features[j][c][p];
        }
        auto gi = [&](std::size_t c) -> double& { return out.gradients[i * channels + c][p]; };
        auto gj = [&](std::size_t c) -> double& { return out.gradients[j * channels + c][p]; };
        switch (measure) {
          case SimilarityMeasure::l1:
            for (std::size_t c = 0; c < channels; ++c) {
              const double d = a[c] - b[c];
              sum += std::abs(d);
              gi(c) += subgradient_sign(d);
              gj(c) -= subgradient_sign(d);
            }
            break;
          case SimilarityMeasure::l2: {
            double sq = 0.0;
            for (std::size_t c = 0; c < channels; ++c) sq += (a[c] - b[c]) * (a[c] - b[c]);
            const double norm = std::sqrt(sq);
            sum += norm;
            if (norm > 0.0)
              for (std::size_t c = 0; c < channels; ++c) {
                gi(c) += (a[c] - b[c]) / norm;
                gj(c) -= (a[c] - b[c]) / norm;
              }
            break;
          }
          case SimilarityMeasure::cost:
            for (std::size_t c = 0; c < channels; ++c) {
              sum -= a[c] * b[c];
              gi(c) -= b[c];
              gj(c) -= a[c];
            }
            break;
          case SimilarityMeasure::cosine: {
            double dot = 0.0, na2 = 0.0, nb2 = 0.0;
            for (std::size_t c = 0; c < channels; ++c) {
              dot += a[c] * b[c];
              na2 += a[c] * a[c];
              nb2 += b[c] * b[c];
            }
            if (na2 == 0.0 || nb2 == 0.0) continue;  // skipped, not counted
            const double na = std::sqrt(na2), nb = std::sqrt(nb2);
            const double cosv = dot / (na * nb);
            sum -= cosv;
            for (std::size_t c = 0; c < channels; ++c) {
              gi(c) -= b[c] / (na * nb) - cosv * a[c] / na2;
              gj(c) -= a[c] / (na * nb) - cosv * b[c] / nb2;
            }
            break;
          }
        }
        ++out.count;
      }
    }
  }
  if (out.count == 0) {
    out.all_masked = true;
    for (auto& g : out.gradients) g.fill(0.0);
    return out;
  }
  const double inv = 1.0 / static_cast<double>(out.count);
  out.value = sum * inv;
  for (auto& g : out.gradients)
    for (double& v : g) v *= inv;
  return out;
}

/// Local mean/std normalization over a (2r+1)^2 window truncated at the border.
/// Pixels whose local std is below 1e-12 map to 0.
inline Image local_normalize(const Image& m, int radius) {
  Image out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      double s = 0.0, s2 = 0.0;
      int n = 0;
      for (int yy = std::max(0, y - radius); yy <= std::min(m.height() - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(m.width() - 1, x + radius); ++xx) {
          s += m(xx, yy);
          ++n;
        }
      const double mean = s / n;
      for (int yy = std::max(0, y - radius); yy <= std::min(m.height() - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(m.width() - 1, x + radius); ++xx)
          s2 += (m(xx, yy) - mean) * (m(xx, yy) - mean);
      const double sd = std::sqrt(s2 / n);
      out(x, y) = sd < 1e-12 ? 0.0 : (m(x, y) - mean) / sd;
    }
  return out;
}

/// Hand-crafted six-channel feature stack standing in for a learned encoder:
/// for window radii 1 and 2, the locally normalized intensity and its forward
/// differences along x and y (stride = radius; zero past the border).
inline FeatureStack extract_features(const Image& m) {
  FeatureStack out;
  for (int r : {1, 2}) {
    Image n = local_normalize(m, r);
    Image gx(m.width(), m.height()), gy(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (x + r < m.width()) gx(x, y) = n(x + r, y) - n(x, y);
        if (y + r < m.height()) gy(x, y) = n(x, y + r) - n(x, y);
      }
    out.push_back(std::move(n));
    out.push_back(std::move(gx));
    out.push_back(std::move(gy));
  }
  return out;
}

// --- Combined objective ----------------------------------------------------

struct LossWeights {
  double smooth = 1.0;
  double edge = 0.1;
  double sim = 0.01;
  double photo = 0.0;         // 0 keeps the objective weakly supervised
  double edge_lambda = 10.0;  // lambda inside the smoothness weight
  double shift = 100.0;       // s in the edge loss
  double edge_epsilon = 1e-3;
  SimilarityMeasure measure = SimilarityMeasure::cosine;

  void validate() const {
    if (smooth < 0 || edge < 0 || sim < 0 || photo < 0 || edge_lambda < 0 || edge_epsilon < 0)
      throw DomainError("loss weights must be non-negative");
    if (!(shift > 0.0)) throw DomainError("edge shift s must be positive");
  }
};

struct LossReport {
  int iteration = 0;
  double tof = 0.0;
  double photo = 0.0;
  double smooth = 0.0;
  double edge = 0.0;
  double sim = 0.0;
  double total = 0.0;
  double masked_fraction = 0.0;
  bool all_masked = false;
};

inline constexpr const char* kLossReportCsvHeader =
    "iteration,L_ToF,L_photo,L_smooth,L_edge,L_sim,total,masked_fraction";

/// Inputs of the flow objective, already instance-normalized.
struct FlowProblem {
  SensorConfig config;
  std::vector<Image> moving;   // per capture
  std::vector<Image> targets;  // static ground truth, normalized with the moving stack's stats
  std::vector<DepthImage> labels;  // per frequency
  double epsilon = PhysicalConstants::default_epsilon;
  /// Optional evaluation region per timestep (e.g. non-disoccluded pixels);
  /// empty means every pixel.
  std::vector<Mask> region;

  int width() const { return moving.front().width(); }
  int height() const { return moving.front().height(); }
  /// Capture whose frame plays the reference role m_N in the edge loss.
  std::size_t reference_capture() const { return moving.size() - 1; }
};

/// Normalizes the moving stack and applies the same affine map to the static
/// ground truth, so the two stay directly comparable.
template <class Bundle>
FlowProblem make_flow_problem(const Bundle& bundle, double epsilon = PhysicalConstants::default_epsilon) {
  bundle.moving.validate();
  const auto stats = instance_stats(bundle.moving.frames);
  FlowProblem p;
  p.config = bundle.moving.config;
  p.moving = apply_normalization(bundle.moving.frames, stats);
  p.targets = apply_normalization(bundle.static_gt.frames, stats);
  p.labels = bundle.depth_gt;
  p.epsilon = epsilon;
  return p;
}

struct LossEvaluation {
  LossReport report;
  std::vector<FlowField> flow_gradients;  // per timestep; reference entry is zero
  std::vector<Image> warped;              // per capture
  std::vector<Mask> masks;                // per capture
};

/// Weighted objective L_ToF + ls L_smooth + le L_edge + lsim L_sim (+ lp L_photo)
/// at the given per-timestep flows, with gradients w.r.t. every flow.
///
/// L_ToF is averaged over frequency groups; L_smooth and L_edge over
/// non-reference captures. L_sim compares hand-crafted features of the
/// static captures and is constant in the flows.
inline LossEvaluation total_loss(const FlowProblem& p, const std::vector<FlowField>& flows,
                                 const LossWeights& weights, bool unwrap = true) {
  weights.validate();
  const auto& cfg = p.config;
  const int nt = cfg.timestep_count();
  const int ref = cfg.reference_timestep;
  if (flows.size() != static_cast<std::size_t>(nt)) throw ShapeError("total_loss: need one flow per timestep");
  if (p.moving.size() != cfg.capture_count() || p.targets.size() != cfg.capture_count())
    throw ShapeError("total_loss: capture count mismatch");
  if (p.labels.size() != cfg.frequency_count()) throw ShapeError("total_loss: need one label per frequency");
  if (!p.region.empty() && p.region.size() != static_cast<std::size_t>(nt))
    throw ShapeError("total_loss: region must hold one mask per timestep");
  const int w = p.width(), h = p.height();

  LossEvaluation ev;
  std::vector<WarpResult> warps(cfg.capture_count());
  std::vector<Mask> loss_masks;
  for (std::size_t c = 0; c < cfg.capture_count(); ++c) {
    const int t = cfg.timestep_layout[c];
    if (t == ref) {
      ev.warped.push_back(p.moving[c]);
      ev.masks.push_back(full_mask(w, h));
    } else {
      warps[c] = warp(p.moving[c], flows[static_cast<std::size_t>(t)]);
      ev.warped.push_back(warps[c].warped);
      ev.masks.push_back(warps[c].mask);
    }
    loss_masks.push_back(p.region.empty() ? ev.masks.back()
                                          : mask_and(ev.masks.back(), p.region[static_cast<std::size_t>(t)]));
  }
  for (int t = 0; t < nt; ++t) ev.flow_gradients.emplace_back(w, h);
  std::vector<Image> frame_grads;
  for (std::size_t c = 0; c < cfg.capture_count(); ++c) frame_grads.emplace_back(w, h);

  auto& rep = ev.report;
  rep.masked_fraction = masked_fraction(ev.masks);

  // ToF
  const double nf = static_cast<double>(cfg.frequency_count());
  bool any_valid = false;
  for (std::size_t fi = 0; fi < cfg.frequency_count(); ++fi) {
    Mask m = loss_masks[4 * fi];
    for (int k = 1; k < 4; ++k) m = mask_and(m, loss_masks[4 * fi + k]);
    const auto lt = loss_tof(std::span<const Image>(ev.warped).subspan(4 * fi, 4), p.labels[fi], p.epsilon,
                             &m, unwrap);
    any_valid = any_valid || !lt.all_masked;
    rep.tof += lt.value / nf;
    for (int k = 0; k < 4; ++k) {
      auto& g = frame_grads[4 * fi + k];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += lt.gradients[k][i] / nf;
    }
  }
  rep.all_masked = !any_valid;

  // Photometric
  {
    const auto lp = loss_photo(ev.warped, p.targets, loss_masks);
    rep.photo = lp.value;
    if (weights.photo > 0.0)
      for (std::size_t c = 0; c < frame_grads.size(); ++c)
        for (std::size_t i = 0; i < frame_grads[c].size(); ++i)
          frame_grads[c][i] += weights.photo * lp.gradients[c][i];
  }

  // Smoothness and edge terms over non-reference captures
  std::vector<std::size_t> moving_captures;
  for (std::size_t c = 0; c < cfg.capture_count(); ++c)
    if (cfg.timestep_layout[c] != ref) moving_captures.push_back(c);
  if (!moving_captures.empty()) {
    const double inv = 1.0 / static_cast<double>(moving_captures.size());
    const Image& reference = p.moving[p.reference_capture()];
    for (std::size_t c : moving_captures) {
      const auto t = static_cast<std::size_t>(cfg.timestep_layout[c]);
      const auto ls = loss_smooth(flows[t], p.moving[c], weights.edge_lambda);
      rep.smooth += inv * ls.value;
      if (weights.smooth > 0.0)
        for (std::size_t i = 0; i < ls.gradients[0].size(); ++i) {
          ev.flow_gradients[t].u[i] += weights.smooth * inv * ls.gradients[0][i];
          ev.flow_gradients[t].v[i] += weights.smooth * inv * ls.gradients[1][i];
        }
      const auto le = loss_edge(ev.warped[c], reference, weights.edge_epsilon, weights.shift, &ev.masks[c]);
      rep.edge += inv * le.value;
      if (weights.edge > 0.0)
        for (std::size_t i = 0; i < le.gradients[0].size(); ++i)
          frame_grads[c][i] += weights.edge * inv * le.gradients[0][i];
    }
  }

  // Similarity of static multi-modal captures (no flow dependence)
  if (weights.sim > 0.0 && cfg.capture_count() >= 2) {
    std::vector<FeatureStack> feats;
    for (const auto& f : p.targets) feats.push_back(extract_features(f));
    rep.sim = loss_sim(feats, weights.measure).value;
  }

  // Chain frame gradients through the warps.
  for (std::size_t c : moving_captures) {
    const auto t = static_cast<std::size_t>(cfg.timestep_layout[c]);
    const auto gf = warps[c].vjp_flow(frame_grads[c]);
    for (std::size_t i = 0; i < gf.u.size(); ++i) {
      ev.flow_gradients[t].u[i] += gf.u[i];
      ev.flow_gradients[t].v[i] += gf.v[i];
    }
  }

  rep.total = rep.tof + weights.smooth * rep.smooth + weights.edge * rep.edge + weights.sim * rep.sim +
              weights.photo * rep.photo;
  return ev;
}

}  // namespace itof
