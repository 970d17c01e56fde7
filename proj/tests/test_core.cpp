#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace itof;

namespace {

constexpr double c = 299792458.0;

// Sinusoidal model samples for theta = 0, pi/2, pi, 3pi/2.
std::array<double, 4> samples(double amp, double off, double dphi) {
  return {off + amp * std::cos(dphi), off + amp * std::cos(dphi + kPi / 2), off + amp * std::cos(dphi + kPi),
          off + amp * std::cos(dphi + 1.5 * kPi)};
}

Image constant(double v) { return Image(1, 1, v); }

DepthImage depth_of(const std::array<double, 4>& m, double f, double eps) {
  return reconstruct_depth(constant(m[0]), constant(m[1]), constant(m[2]), constant(m[3]), f, eps);
}

}  // namespace

TEST(DMax, KnownFrequencies) {
  EXPECT_NEAR(d_max(20e6), 7.49481145, 1e-8);
  EXPECT_NEAR(d_max(50e6), 2.99792458, 1e-8);
  EXPECT_DOUBLE_EQ(d_max(70e6), c / 140e6);
}

TEST(DMax, MonotoneDecreasing) {
  double prev = d_max(1e3);
  for (double f = 1e4; f < 1e12; f *= 10) {
    EXPECT_LT(d_max(f), prev);
    prev = d_max(f);
  }
}

TEST(DMax, RejectsNonPositive) {
  EXPECT_THROW(d_max(0.0), DomainError);
  EXPECT_THROW(d_max(-20e6), DomainError);
  EXPECT_THROW(d_max(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(WrapDepth, Examples) {
  EXPECT_NEAR(wrap_depth(9.0, 20e6), 9.0 - c / 40e6, 1e-12);
  EXPECT_NEAR(wrap_depth(9.0, 20e6), 1.50518855, 1e-8);
  EXPECT_EQ(wrap_depth(0.0, 20e6), 0.0);
  EXPECT_EQ(wrap_depth(d_max(20e6), 20e6), 0.0);
  EXPECT_NEAR(wrap_depth(-1.0, 20e6), d_max(20e6) - 1.0, 1e-12);
}

TEST(WrapDepth, IdempotentAndInRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double d = u(rng);
    const double w = wrap_depth(d, 50e6);
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, d_max(50e6));
    EXPECT_EQ(wrap_depth(w, 50e6), w);
  }
}

TEST(SensorConfig, TimestepCounts) {
  EXPECT_EQ(SensorConfig::make({20e6}, 1).timestep_count(), 4);
  EXPECT_EQ(SensorConfig::make({20e6}, 2).timestep_count(), 2);
  EXPECT_EQ(SensorConfig::make({20e6, 50e6, 70e6}, 1).timestep_count(), 12);
  EXPECT_EQ(SensorConfig::make({20e6, 50e6, 70e6}, 2).timestep_count(), 6);
  EXPECT_EQ(SensorConfig::make({20e6, 50e6, 70e6}, 4).timestep_count(), 3);
}

TEST(SensorConfig, LayoutAndPhases) {
  const auto cfg = SensorConfig::make({20e6, 50e6}, 2);
  EXPECT_EQ(cfg.capture_count(), 8u);
  EXPECT_EQ(cfg.timestep_layout, (std::vector<int>{0, 1, 0, 1, 2, 3, 2, 3}));
  EXPECT_EQ(cfg.reference_timestep, 3);
  for (std::size_t i = 0; i < cfg.capture_count(); ++i) EXPECT_DOUBLE_EQ(cfg.phase_shifts[i], (i % 4) * kPi / 2);
  EXPECT_EQ(cfg.tap_id(0), 0);
  EXPECT_EQ(cfg.tap_id(2), 1);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(SensorConfig, ValidateRejectsBrokenLayouts) {
  auto cfg = SensorConfig::make({20e6}, 1);
  cfg.reference_timestep = 0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = SensorConfig::make({20e6}, 1);
  cfg.phase_shifts[1] = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  EXPECT_THROW(SensorConfig::make({20e6}, 3), DomainError);
  EXPECT_THROW(SensorConfig::make({}, 1), DomainError);
}

TEST(Reconstruct, QuarterPiExample) {
  const auto m = samples(1.0, 0.5, kPi / 4);
  EXPECT_NEAR(m[0], 1.2071, 1e-4);
  EXPECT_NEAR(m[1], -0.2071, 1e-4);
  const double d = depth_of(m, 20e6, 0.0).values[0];
  EXPECT_NEAR(d, c / 40e6 / 8.0, 1e-12);
  EXPECT_NEAR(d, 0.93685, 1e-5);
}

TEST(Reconstruct, ZeroPhase) {
  EXPECT_EQ(depth_of({1.5, 0.5, -0.5, 0.5}, 20e6, 0.0).values[0], 0.0);
}

TEST(Reconstruct, PhaseGridRoundTrip) {
  for (double f : {20e6, 50e6, 70e6})
    for (int k = 1; k < 1000; ++k) {
      const double dphi = kTwoPi * k / 1000.0;
      const double expected = wrap_depth(dphi * c / (4 * kPi * f), f);
      const auto dimg = depth_of(samples(0.8, 1.1, dphi), f, 0.0);
      EXPECT_NEAR(dimg.values[0], expected, 1e-9);
      EXPECT_EQ(dimg.valid_mask[0], 1);
    }
}

TEST(Reconstruct, AffineInvarianceAtZeroEpsilon) {
  std::mt19937_64 rng(11);
  std::array<Image, 4> m;
  for (auto& f : m) f = testutil::random_image(rng, 16, 16);
  const auto base = reconstruct_depth(m[0], m[1], m[2], m[3], 20e6, 0.0);
  for (double a : {0.5, 2.0, 10.0})
    for (double b : {-1.0, 0.0, 3.0}) {
      std::array<Image, 4> t = m;
      for (auto& f : t)
        for (double& v : f) v = a * v + b;
      const auto d = reconstruct_depth(t[0], t[1], t[2], t[3], 20e6, 0.0);
      EXPECT_LE(testutil::max_abs_diff(d.values, base.values), 1e-9);
    }
}

TEST(Reconstruct, EpsilonPerturbationBound) {
  std::mt19937_64 rng(5);
  std::array<Image, 4> m;
  for (auto& f : m) f = testutil::random_image(rng, 64, 64);
  const double eps = 1e-3, f = 20e6;
  const auto d0 = reconstruct_depth(m[0], m[1], m[2], m[3], f, 0.0);
  const auto d1 = reconstruct_depth(m[0], m[1], m[2], m[3], f, eps);
  for (std::size_t i = 0; i < d0.values.size(); ++i) {
    const double x = m[0][i] - m[2][i];
    if (std::abs(x) <= 10 * eps) continue;
    double diff = std::abs(d1.values[i] - d0.values[i]);
    diff = std::min(diff, d_max(f) - diff);
    EXPECT_LE(diff, c / (4 * kPi * f) * 2 * eps / std::abs(x));
  }
}

TEST(Reconstruct, SignOfZeroIsPositive) {
  EXPECT_EQ(stabilizer_sign(0.0), 1.0);
  EXPECT_EQ(stabilizer_sign(-0.0), 1.0);
  // x = 0, y > 0: the stabilized denominator is +eps, so the phase sits just below pi/2.
  const double d = depth_of({0.0, 0.0, 0.0, 1.0}, 20e6, 1e-6).values[0];
  EXPECT_LT(d, d_max(20e6) / 4);
  EXPECT_NEAR(d, d_max(20e6) / 4, 1e-5);
}

TEST(Reconstruct, ShapeMismatchThrows) {
  EXPECT_THROW(reconstruct_depth(Image(2, 2), Image(2, 2), Image(2, 2), Image(3, 2), 20e6), ShapeError);
  EXPECT_THROW(reconstruct_depth(Image(2, 2), Image(2, 2), Image(2, 2), Image(2, 2), 20e6, -1.0), DomainError);
}

TEST(CombineTaps, Examples) {
  EXPECT_EQ(combine_taps(Image(3, 3, 0.7), Image(3, 3, 0.7)), Image(3, 3, 0.0));
  EXPECT_EQ(combine_taps(Image(3, 3, 2.0), Image(3, 3, 0.5)), Image(3, 3, 1.5));
}

TEST(CombineTaps, Antisymmetric) {
  std::mt19937_64 rng(2);
  const Image a = testutil::random_image(rng, 8, 8), b = testutil::random_image(rng, 8, 8);
  const Image ab = combine_taps(a, b), ba = combine_taps(b, a);
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_EQ(ab[i] + ba[i], 0.0);
}

namespace {

std::vector<TapPair> synthetic_pairs(double gain, double offset, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TapPair> pairs;
  for (int k = 0; k < n; ++k) {
    Image b = testutil::random_image(rng, 6, 5, 0.2, 2.0);
    Image a = b;
    for (double& v : a) v = gain * v + offset;
    pairs.push_back({a, b});
  }
  return pairs;
}

}  // namespace

TEST(TapCalibration, RecoversGainAndOffset) {
  const auto calib = fit_tap_calibration(synthetic_pairs(1.2, 0.05, 8, 1));
  for (std::size_t i = 0; i < calib.gain.size(); ++i) {
    EXPECT_NEAR(calib.gain[i], 1.2, 1e-9);
    EXPECT_NEAR(calib.offset[i], 0.05, 1e-9);
  }
}

TEST(TapCalibration, IdentityData) {
  const auto calib = fit_tap_calibration(synthetic_pairs(1.0, 0.0, 4, 2));
  for (std::size_t i = 0; i < calib.gain.size(); ++i) {
    EXPECT_NEAR(calib.gain[i], 1.0, 1e-12);
    EXPECT_NEAR(calib.offset[i], 0.0, 1e-12);
  }
}

TEST(TapCalibration, GainMismatchResidual) {
  // Tap B reads 1/1.1 of tap A's response; calibrating removes the mismatch.
  const auto pairs = synthetic_pairs(1.1, 0.0, 6, 3);
  const auto calib = fit_tap_calibration(pairs);
  for (const auto& p : pairs) {
    const Image r = combine_taps(p.a, p.b, calib);
    for (double v : r) EXPECT_LT(std::abs(v), 1e-6);
  }
}

TEST(TapCalibration, ConstantTapBFallsBack) {
  std::vector<TapPair> pairs{{Image(2, 2, 1.0), Image(2, 2, 0.5)}, {Image(2, 2, 2.0), Image(2, 2, 0.5)}};
  const auto calib = fit_tap_calibration(pairs);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(calib.gain[i], 1.0);
    EXPECT_DOUBLE_EQ(calib.offset[i], 1.0);  // mean(a - b) = mean(0.5, 1.5)
  }
}

TEST(TapCalibration, NeedsTwoPairs) {
  EXPECT_THROW(fit_tap_calibration(synthetic_pairs(1.0, 0.0, 1, 4)), DomainError);
}

TEST(InstanceNormalize, ZeroMeanUnitStd) {
  std::mt19937_64 rng(9);
  MeasurementStack s{SensorConfig::make({20e6}, 1), {}};
  for (int k = 0; k < 4; ++k) s.frames.push_back(testutil::random_image(rng, 10, 7, 3.0, 9.0));
  const auto n = instance_normalize(s);
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& f : n.frames)
    for (double v : f) {
      sum += v;
      sq += v * v;
      ++count;
    }
  const double mean = sum / count;
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(sq / count - mean * mean), 1.0, 1e-6);
}

TEST(InstanceNormalize, ConstantStackBecomesZero) {
  MeasurementStack s{SensorConfig::make({20e6}, 1), std::vector<Image>(4, Image(3, 3, 2.5))};
  for (const auto& f : instance_normalize(s).frames)
    for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(InstanceNormalize, PreservesReconstruction) {
  std::mt19937_64 rng(21);
  MeasurementStack s{SensorConfig::make({20e6}, 1), {}};
  for (int k = 0; k < 4; ++k) s.frames.push_back(testutil::random_image(rng, 12, 12, 0.0, 5.0));
  const auto a = reconstruct_stack(s, 0.0), b = reconstruct_stack(instance_normalize(s), 0.0);
  EXPECT_LE(testutil::max_abs_diff(a[0].values, b[0].values), 1e-9);
}
