#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "modpde/modulation.hpp"
#include "oracles.hpp"

using namespace modpde;

namespace {

ModulationPath random_walk(std::size_t samples, std::uint64_t seed, double scale = 1.0)
{
  Rng rng(seed);
  std::vector<double> v(samples, 0.0);
  for (std::size_t i = 1; i < samples; ++i)
    v[i] = v[i - 1] + scale * rng.normal() / std::sqrt(static_cast<double>(samples));
  return from_samples(v, 1.0);
}

} // namespace

TEST(Path, NormalizesFirstSample)
{
  const auto p = from_samples({3.0, 4.0, 5.0}, 1.0);
  ASSERT_EQ(p.sample_count(), 3u);
  EXPECT_EQ(p.values()[0], 0.0);
  EXPECT_EQ(p.values()[1], 1.0);
  EXPECT_EQ(p.values()[2], 2.0);
}

TEST(Path, RejectsTooFewSamples) { EXPECT_THROW(from_samples({0.0}, 1.0), std::invalid_argument); }

TEST(Path, RejectsNonFinite)
{
  EXPECT_THROW(from_samples({0.0, std::nan("")}, 1.0), std::invalid_argument);
  EXPECT_THROW(from_samples({0.0, 1.0}, 0.0), std::invalid_argument);
}

TEST(Path, TwoSamplesOnLongerHorizon)
{
  const auto p = from_samples({0.0, 1.0}, 2.0);
  EXPECT_EQ(p.value_at(2.0), 1.0);
  EXPECT_DOUBLE_EQ(p.value_at(1.0), 0.5);
}

TEST(Path, TextRoundTrip)
{
  const auto p = random_walk(33, 5);
  std::stringstream ss;
  write_path(ss, p);
  const auto q = read_path(ss);
  ASSERT_EQ(q.sample_count(), p.sample_count());
  for (std::size_t i = 0; i < p.sample_count(); ++i)
    EXPECT_EQ(q.values()[i], p.values()[i]);
  EXPECT_EQ(q.horizon(), p.horizon());
}

TEST(Phase, ZeroFrequencyIsIntervalLength)
{
  const auto p = random_walk(64, 1);
  EXPECT_EQ(phase_integral(p, 0.125, 0.75, 0.0), cplx(0.75 - 0.125, 0.0));
}

TEST(Phase, FullPeriodCancels)
{
  const auto p = linear_path(1.0, 1.0);
  EXPECT_LT(std::abs(phase_integral(p, 0.0, 1.0, 2.0 * std::numbers::pi)), 1e-15);
}

TEST(Phase, LinearPathClosedForm)
{
  const auto p = linear_path(1.0, 1.0, 17);
  for (double a : {-37.0, -1.5, 0.3, 7.0, 250.0}) {
    const double r = 0.1;
    const double t = 0.83;
    const cplx exact = (std::polar(1.0, a * t) - std::polar(1.0, a * r)) / cplx(0.0, a);
    EXPECT_LT(std::abs(phase_integral(p, r, t, a) - exact), 1e-14) << a;
  }
}

TEST(Phase, MatchesQuadratureOracle)
{
  Rng rng(2024);
  for (int c = 0; c < 60; ++c) {
    const auto p = random_walk(256, 100 + static_cast<std::uint64_t>(c), 3.0);
    double r = rng.uniform();
    double t = rng.uniform();
    if (r > t)
      std::swap(r, t);
    const double a = (2.0 * rng.uniform() - 1.0) * 1e3;
    const cplx got = phase_integral(p, r, t, a);
    const cplx want = oracle::phase(p, r, t, a);
    EXPECT_LT(std::abs(got - want), 1e-10) << "case " << c << " a=" << a;
  }
}

TEST(Phase, AdditiveOverSplits)
{
  const auto p = random_walk(300, 9, 2.0);
  for (double a : {-400.0, -3.0, 11.0, 999.0}) {
    const cplx whole = phase_integral(p, 0.05, 0.95, a);
    const cplx split = phase_integral(p, 0.05, 0.4321, a) + phase_integral(p, 0.4321, 0.95, a);
    EXPECT_LT(std::abs(whole - split), 1e-12);
  }
}

TEST(Phase, ConjugationSymmetry)
{
  const auto p = random_walk(300, 10, 2.0);
  for (double a : {0.7, 42.0, 640.0})
    EXPECT_LT(std::abs(phase_integral(p, 0.2, 0.9, -a) - std::conj(phase_integral(p, 0.2, 0.9, a))), 1e-12);
}

TEST(Phase, RejectsBadInterval)
{
  const auto p = random_walk(8, 1);
  EXPECT_THROW(phase_integral(p, 0.6, 0.5, 1.0), std::out_of_range);
  EXPECT_THROW(phase_integral(p, 0.0, 1.5, 1.0), std::out_of_range);
}

TEST(Phase, CumulativeMatchesDirect)
{
  const auto p = random_walk(129, 3, 2.0);
  const CumulativePhase cum(p, 17.0);
  for (double s : {0.0, 0.1, 0.5, 0.77, 1.0})
    EXPECT_LT(std::abs(cum.at(s) - phase_integral(p, 0.0, s, 17.0)), 1e-13);
}

TEST(IteratedPhase, MatchesNestedQuadrature)
{
  const auto p = random_walk(12, 77, 2.0);
  const std::vector<std::pair<double, double>> freqs{{0.0, 3.0}, {5.0, 0.0}, {-7.0, 4.0}, {30.0, -12.0}, {1e-4, 2.0}};
  for (auto [a, b] : freqs) {
    const cplx got = iterated_phase_integral(p, 0.13, 0.91, a, b);
    const cplx want = oracle::iterated_phase(p, 0.13, 0.91, a, b);
    EXPECT_LT(std::abs(got - want), 1e-10) << a << ' ' << b;
  }
}

TEST(IteratedPhase, ZeroFrequenciesGiveHalfSquare)
{
  const auto p = random_walk(20, 1);
  EXPECT_NEAR(std::abs(iterated_phase_integral(p, 0.2, 0.7, 0.0, 0.0) - cplx(0.125, 0.0)), 0.0, 1e-15);
}

TEST(Fbm, Deterministic)
{
  const auto a = generate_fbm(0.3, 1.0, 513, 42);
  const auto b = generate_fbm(0.3, 1.0, 513, 42);
  ASSERT_EQ(a.sample_count(), 513u);
  for (std::size_t i = 0; i < a.sample_count(); ++i)
    ASSERT_EQ(a.values()[i], b.values()[i]);
  const auto c = generate_fbm(0.3, 1.0, 513, 43);
  EXPECT_NE(a.values()[100], c.values()[100]);
}

TEST(Fbm, RejectsBadHurst)
{
  EXPECT_THROW(generate_fbm(0.0, 1.0, 65, 1), std::invalid_argument);
  EXPECT_THROW(generate_fbm(1.0, 1.0, 65, 1), std::invalid_argument);
}

// Increment variance over an ensemble of 1e4 paths against Delta^{2H}.
class FbmVariance : public ::testing::TestWithParam<double> {};

TEST_P(FbmVariance, MatchesPowerLaw)
{
  const double H = GetParam();
  const std::size_t M = 64;
  const std::size_t paths = 10000;
  for (std::size_t lag : {1u, 8u}) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < paths; ++j) {
      const auto p = generate_fbm(H, 1.0, M + 1, derive_seed(555, j));
      const auto w = p.values();
      // one increment per path keeps the samples independent
      const double d = w[lag] - w[0];
      sum += d * d;
      ++count;
    }
    const double delta = static_cast<double>(lag) / static_cast<double>(M);
    const double want = std::pow(delta, 2.0 * H);
    EXPECT_NEAR(sum / static_cast<double>(count) / want, 1.0, 0.05) << "H=" << H << " lag=" << lag;
  }
}

INSTANTIATE_TEST_SUITE_P(Hurst, FbmVariance, ::testing::Values(0.5, 0.3, 0.1));

TEST(Fbm, CovarianceStructure)
{
  // E[w(s) w(t)] = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2 at s = 1/4, t = 1
  const double H = 0.3;
  const std::size_t paths = 10000;
  double acc = 0.0;
  for (std::size_t j = 0; j < paths; ++j) {
    const auto p = generate_fbm(H, 1.0, 17, derive_seed(777, j));
    acc += p.values()[4] * p.values()[16];
  }
  const double want = 0.5 * (std::pow(0.25, 2 * H) + 1.0 - std::pow(0.75, 2 * H));
  EXPECT_NEAR(acc / paths, want, 0.05 * want);
}

TEST(Irregularity, LinearPathGammaOneIsOne)
{
  const auto p = linear_path(1.0, 1.0, 65);
  const auto est = irregularity_norm(p, 0.0, 1.0 - 1e-12, 100.0);
  EXPECT_NEAR(est.norm_estimate, 1.0, 1e-9);
  EXPECT_EQ(est.argmax_a, 0.0);
}

TEST(Irregularity, ZeroFrequencyCellBound)
{
  const auto p = generate_fbm(0.4, 2.0, 257, 3);
  const double gamma = 0.6;
  const auto est = irregularity_norm(p, 0.0, gamma, 50.0);
  EXPECT_GE(est.norm_estimate, std::pow(2.0, 1.0 - gamma) * (1.0 - 1e-12));
}

TEST(Irregularity, EstimateIsGridSupremum)
{
  const auto p = generate_fbm(0.3, 1.0, 1025, 8);
  const IrregularityGrid grid{1.0, 16, 33};
  const auto est = irregularity_norm(p, 0.8, 0.6, 300.0, grid);
  const auto times = uniform_time_grid(1.0, grid.time_grid_size);
  double sup = 0.0;
  for (double a : frequency_grid(300.0, grid))
    for (std::size_t i = 0; i < times.size(); ++i)
      for (std::size_t j = i + 1; j < times.size(); ++j)
        sup = std::max(sup, std::pow(1.0 + a * a, 0.4) * std::abs(phase_integral(p, times[i], times[j], a)) /
                                std::pow(times[j] - times[i], 0.6));
  EXPECT_NEAR(est.norm_estimate, sup, 1e-9 * sup);
}

TEST(Irregularity, SweepMatchesSeparateCalls)
{
  const auto p = generate_fbm(0.5, 1.0, 2049, 4);
  const std::vector<double> levels{20.0, 40.0, 80.0, 160.0};
  const IrregularityGrid grid{1.0, 24, 33};
  const auto sweep = irregularity_sweep(p, 0.9, 0.6, levels, grid);
  ASSERT_EQ(sweep.size(), levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto one = irregularity_norm(p, 0.9, 0.6, levels[i], grid);
    EXPECT_EQ(sweep[i].norm_estimate, one.norm_estimate);
    EXPECT_EQ(sweep[i].a_grid_size, one.a_grid_size);
  }
}

TEST(Irregularity, RhoOfLinearPathBounded)
{
  const auto p = linear_path(1.0, 1.0, 2);
  EXPECT_LE(estimate_rho(p, 0.6, 1e3), 0.6);
}

TEST(Irregularity, RhoOfFlatPathIsZero)
{
  const auto p = from_samples(std::vector<double>(33, 2.5), 1.0);
  EXPECT_EQ(estimate_rho(p, 0.6, 1e3), 0.0);
}

TEST(Irregularity, RougherPathsDecayFaster)
{
  std::vector<double> low;
  std::vector<double> high;
  const IrregularityGrid grid{1.0, 32, 65};
  for (std::uint64_t i = 0; i < 9; ++i) {
    low.push_back(estimate_rho(generate_fbm(0.1, 1.0, 8193, derive_seed(99, i)), 0.6, 300.0, grid));
    high.push_back(estimate_rho(generate_fbm(0.5, 1.0, 8193, derive_seed(99, i)), 0.6, 300.0, grid));
  }
  std::nth_element(low.begin(), low.begin() + 4, low.end());
  std::nth_element(high.begin(), high.begin() + 4, high.end());
  EXPECT_GT(low[4], high[4]);
}

TEST(Irregularity, ResolutionLimitOfLinearPath)
{
  const auto p = linear_path(2.0, 1.0, 101); // increments 0.02
  EXPECT_NEAR(resolution_limit(p), std::numbers::pi / 0.02, 1e-9);
}
