#include <gtest/gtest.h>

#include <sstream>

#include "modpde/spectral.hpp"

using namespace modpde;

TEST(Symbol, KdvCube) { EXPECT_EQ(dispersion_value(DispersionSymbol::kdv(), 2), 8.0); }

TEST(Symbol, BenjaminOnoSignedSquare) { EXPECT_EQ(dispersion_value(DispersionSymbol::bo(), -3), -9.0); }

TEST(Symbol, IlwDepthOne)
{
  // coth(1) - 1
  const double want = std::cosh(1.0) / std::sinh(1.0) - 1.0;
  EXPECT_NEAR(dispersion_value(DispersionSymbol::ilw(1.0), 1), want, 1e-15);
  EXPECT_NEAR(want, 0.3130352855, 1e-10);
}

TEST(Symbol, IlwLargeArgumentDoesNotOverflow)
{
  const double v = dispersion_value(DispersionSymbol::ilw(50.0), 40);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 1600.0 - 40.0 / 50.0, 1e-9);
}

TEST(Symbol, IlwApproachesBenjaminOnoForDeepWater)
{
  // n^2 coth(delta n) - n/delta -> |n| n as delta -> infinity
  for (int n : {1, 5, 17})
    EXPECT_NEAR(dispersion_value(DispersionSymbol::ilw(1e6), n), dispersion_value(DispersionSymbol::bo(), n), 1e-4);
}

TEST(Symbol, ParityAndZero)
{
  for (auto sym : {DispersionSymbol::kdv(), DispersionSymbol::bo(), DispersionSymbol::ilw(0.7)}) {
    EXPECT_EQ(dispersion_value(sym, 0), 0.0);
    for (int n = 1; n <= 12; ++n)
      EXPECT_EQ(dispersion_value(sym, -n), -dispersion_value(sym, n));
  }
  const auto s = DispersionSymbol::schrodinger();
  for (int n = 0; n <= 12; ++n) {
    EXPECT_EQ(dispersion_value(s, n), -static_cast<double>(n * n));
    EXPECT_EQ(dispersion_value(s, -n), dispersion_value(s, n));
  }
}

TEST(Symbol, RejectsBadDepth)
{
  EXPECT_THROW(DispersionSymbol::ilw(0.0), std::invalid_argument);
  EXPECT_THROW(DispersionSymbol::ilw(-1.0), std::invalid_argument);
}

TEST(Propagator, ZeroIsIdentity)
{
  const auto f = random_field(8, FieldProfile::white(), 3);
  EXPECT_EQ(propagator_apply(f, DispersionSymbol::kdv(), 0.0), f);
}

TEST(Propagator, Unimodular)
{
  const auto f = random_field(12, FieldProfile::white(), 4);
  for (double s : {0.0, 1.0}) {
    const auto g = propagator_apply(f, DispersionSymbol::bo(), 0.731);
    EXPECT_NEAR(sobolev_norm(g, s), sobolev_norm(f, s), 1e-12 * sobolev_norm(f, s));
  }
}

TEST(Propagator, InverseUndoesForward)
{
  const auto f = random_field(12, FieldProfile::white(), 5);
  const auto sym = DispersionSymbol::ilw(2.0);
  const auto g = propagator_apply(propagator_apply(f, sym, -1.37), sym, -1.37, true);
  for (int n = -12; n <= 12; ++n)
    EXPECT_LT(std::abs(g[n] - f[n]), 1e-14);
}

TEST(Propagator, MultiplierValue)
{
  SpectralField f(4);
  f[3] = 1.0;
  const auto g = propagator_apply(f, DispersionSymbol::kdv(), 0.01);
  EXPECT_LT(std::abs(g[3] - std::polar(1.0, 0.27)), 1e-15);
}

TEST(Propagator, PreservesRealityForOddSymbols)
{
  const auto f = random_field(10, FieldProfile::white(), 6, {true, true});
  const auto g = propagator_apply(f, DispersionSymbol::kdv(), 0.4);
  EXPECT_TRUE(g.real_valued());
  EXPECT_LT(g.constraint_violation(), 1e-15);
  const auto h = propagator_apply(f, DispersionSymbol::schrodinger(), 0.4);
  EXPECT_FALSE(h.real_valued());
}

TEST(Sobolev, SingleModeNorms)
{
  SpectralField f(4);
  f[1] = 1.0;
  EXPECT_EQ(sobolev_norm(f, 0.0), 1.0);
  EXPECT_NEAR(sobolev_norm(f, 1.0), std::sqrt(2.0), 1e-15);
}

TEST(Sobolev, L2IsEuclidean)
{
  const auto f = random_field(20, FieldProfile::white(), 7);
  double sq = 0.0;
  for (const auto& c : f.coeffs())
    sq += std::norm(c);
  EXPECT_NEAR(l2_norm(f), std::sqrt(sq), 1e-14);
}

TEST(RandomField, SingleModeRealIsCosine)
{
  const auto f = random_field(5, FieldProfile::single_mode(1), 0, {true, true});
  EXPECT_EQ(f[1], cplx(0.5, 0.0));
  EXPECT_EQ(f[-1], cplx(0.5, 0.0));
  EXPECT_NEAR(l2_norm(f) * l2_norm(f), 0.5, 1e-15);
}

TEST(RandomField, Deterministic)
{
  EXPECT_EQ(random_field(16, FieldProfile::power_law(1.0), 11), random_field(16, FieldProfile::power_law(1.0), 11));
  EXPECT_NE(random_field(16, FieldProfile::power_law(1.0), 11), random_field(16, FieldProfile::power_law(1.0), 12));
}

TEST(RandomField, ConstraintsHold)
{
  const auto f = random_field(16, FieldProfile::white(), 9, {true, true});
  EXPECT_EQ(f[0], cplx{});
  EXPECT_EQ(f.constraint_violation(), 0.0);
}

TEST(RandomField, PowerLawAmplitudes)
{
  const auto f = random_field(16, FieldProfile::power_law(0.75), 1);
  for (int n = -16; n <= 16; ++n)
    EXPECT_NEAR(std::abs(f[n]), std::pow(1.0 + n * n, -0.375), 1e-15);
}

TEST(RandomField, PowerLawSobolevGrowth)
{
  // |c_n| = <n>^{-0.75}: sum <n>^{2s - 1.5} converges at s = 0 and diverges at s = 0.3
  double prev03 = 0.0;
  double prev0 = 0.0;
  double first03 = 0.0;
  for (int N : {16, 64, 256, 1024}) {
    const auto f = random_field(N, FieldProfile::power_law(0.75), 2);
    const double s03 = sobolev_norm(f, 0.3);
    const double s0 = sobolev_norm(f, 0.0);
    double partial = 0.0;
    for (int n = -N; n <= N; ++n)
      partial += std::pow(1.0 + n * n, 0.3 - 0.75);
    EXPECT_NEAR(s03, std::sqrt(partial), 1e-10 * s03);
    EXPECT_GT(s03, prev03);
    EXPECT_GT(s0, prev0);
    EXPECT_LT(s0, 3.0); // sum <n>^{-1.5} < 1 + 2 zeta(1.5)
    if (first03 == 0.0)
      first03 = s03;
    prev03 = s03;
    prev0 = s0;
  }
  // partial sums grow like N^{0.1}
  EXPECT_GT(prev03 / first03, 1.3);
}

TEST(RandomField, SingleModeOutsideBandRejected)
{
  EXPECT_THROW(random_field(4, FieldProfile::single_mode(5), 0), std::invalid_argument);
  EXPECT_THROW(random_field(4, FieldProfile::single_mode(0), 0, {true, false}), std::invalid_argument);
}

TEST(Field, Normalized)
{
  const auto f = normalized(random_field(10, FieldProfile::white(), 1), 1.0);
  EXPECT_NEAR(sobolev_norm(f, 1.0), 1.0, 1e-14);
  const SpectralField z(3);
  EXPECT_EQ(normalized(z), z);
}

TEST(Field, ArithmeticAndBands)
{
  auto f = random_field(6, FieldProfile::white(), 1);
  const auto g = f;
  f -= g;
  EXPECT_EQ(l2_norm(f), 0.0);
  EXPECT_THROW(f += SpectralField(7), std::invalid_argument);
  EXPECT_EQ(f.at(99), cplx{});
}

TEST(Field, EnforceConstraintsProjects)
{
  auto f = random_field(6, FieldProfile::white(), 2);
  f.set_flags(true, true);
  EXPECT_GT(f.constraint_violation(), 0.0);
  f.enforce_constraints();
  EXPECT_EQ(f.constraint_violation(), 0.0);
}

TEST(Field, TextRoundTrip)
{
  const auto f = random_field(9, FieldProfile::power_law(1.3), 3, {true, true});
  std::stringstream ss;
  write_field(ss, f);
  const auto g = read_field(ss);
  EXPECT_EQ(g, f);
}

TEST(Field, ReadRejectsMalformed)
{
  std::stringstream bad1("nonsense\n");
  EXPECT_THROW(read_field(bad1), std::runtime_error);
  std::stringstream bad2("# specfield v1 N=1 flags=none\n-1 0 0\n0 0 0\n");
  EXPECT_THROW(read_field(bad2), std::runtime_error);
}
