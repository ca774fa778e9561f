#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numbers>

#include "modpde/operators.hpp"
#include "oracles.hpp"

using namespace modpde;

namespace {

std::shared_ptr<const ModulationPath> unit_line() { return std::make_shared<const ModulationPath>(linear_path(1.0, 1.0)); }

std::shared_ptr<const ModulationPath> rough(std::uint64_t seed, std::size_t samples = 257)
{
  return std::make_shared<const ModulationPath>(generate_fbm(0.3, 1.0, samples, seed));
}

SpectralField delta(int N, int n, cplx v = 1.0)
{
  SpectralField f(N);
  f[n] = v;
  return f;
}

SpectralField real_field(int N, std::uint64_t seed)
{
  return normalized(random_field(N, FieldProfile::white(), seed, {true, true}));
}

SpectralField complex_field(int N, std::uint64_t seed) { return normalized(random_field(N, FieldProfile::white(), seed)); }

double rel_diff(const SpectralField& a, const SpectralField& b)
{
  return oracle::max_abs_diff(a, b) / std::max(1.0, oracle::max_abs(a));
}

// two smallest of |n|, |n1|, |n2|
long long two_smallest(long long n, long long n1, long long n2)
{
  std::array<long long, 3> v{std::abs(n), std::abs(n1), std::abs(n2)};
  std::sort(v.begin(), v.end());
  return v[0] * v[1];
}

long long sgn(long long x) { return (x > 0) - (x < 0); }

} // namespace

// ---------------------------------------------------------------------------
// resonance functions

TEST(Resonance, KdvFactorization)
{
  const auto sym = DispersionSymbol::kdv();
  for (long long n1 = -20; n1 <= 20; ++n1)
    for (long long n2 = -20; n2 <= 20; ++n2)
      EXPECT_EQ(resonance_quadratic(sym, n1 + n2, n1, n2), -3.0 * (n1 + n2) * n1 * n2);
  EXPECT_EQ(resonance_quadratic(sym, 3, 1, 2), -18.0);
}

TEST(Resonance, BenjaminOnoSignCases)
{
  const auto sym = DispersionSymbol::bo();
  for (long long n1 = -20; n1 <= 20; ++n1)
    for (long long n2 = -20; n2 <= 20; ++n2) {
      const long long n = n1 + n2;
      const double want = -2.0 * static_cast<double>(sgn(n * n1 * n2) * two_smallest(n, n1, n2));
      EXPECT_EQ(resonance_quadratic(sym, n, n1, n2), want) << n1 << ' ' << n2;
    }
  EXPECT_EQ(resonance_quadratic(sym, 3, 1, 2), -4.0);
}

TEST(Resonance, DnlsFactorization)
{
  const auto sym = DispersionSymbol::schrodinger();
  for (long long n1 = -20; n1 <= 20; ++n1)
    for (long long n2 = -20; n2 <= 20; ++n2)
      EXPECT_EQ(resonance_quadratic(sym, n1 + n2, n1, n2), 2.0 * n1 * n2);
  EXPECT_EQ(resonance_quadratic(sym, 3, 1, 2), 4.0);
}

TEST(Resonance, NlsFactorization)
{
  for (long long n1 = -12; n1 <= 12; ++n1)
    for (long long n2 = -12; n2 <= 12; ++n2)
      for (long long n3 = -12; n3 <= 12; ++n3) {
        const long long n = n1 - n2 + n3;
        EXPECT_EQ(resonance_cubic_nls(n, n1, n2, n3), 2 * (n - n1) * (n - n3));
      }
  EXPECT_EQ(resonance_cubic_nls(2, 1, 1, 2), 0);
  EXPECT_EQ(resonance_cubic_nls(3, 1, 0, 2), 4);
}

TEST(Resonance, IlwIsSymbolCombination)
{
  const auto sym = DispersionSymbol::ilw(0.8);
  for (int n1 : {-7, -1, 2, 5})
    for (int n2 : {-3, 1, 4}) {
      const int n = n1 + n2;
      const double want = -dispersion_value(sym, n) + dispersion_value(sym, n1) + dispersion_value(sym, n2);
      EXPECT_EQ(resonance_quadratic(sym, n, n1, n2), want);
    }
}

// ---------------------------------------------------------------------------
// quadratic family

TEST(Bilinear, SingleTermClosedForm)
{
  const OperatorContext ctx(EquationKind::KdV, unit_line(), 4);
  const double t = std::numbers::pi / 18.0;
  const auto out = bilinear_driver(ctx, 0.0, t, delta(4, 1), delta(4, 2));
  EXPECT_NEAR(out[3].real(), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(out[3].imag(), 0.0, 1e-14);
  for (int n = -4; n <= 4; ++n)
    if (n != 3)
      EXPECT_EQ(out[n], cplx{});
}

TEST(Bilinear, ZeroInput)
{
  const OperatorContext ctx(EquationKind::KdV, rough(1), 6);
  const auto f = real_field(6, 2);
  EXPECT_EQ(oracle::max_abs(bilinear_driver(ctx, 0.1, 0.7, f, SpectralField(6))), 0.0);
  EXPECT_EQ(oracle::max_abs(bilinear_driver(ctx, 0.1, 0.7, SpectralField(6), f)), 0.0);
}

TEST(Bilinear, HermitianAndMeanZero)
{
  for (auto eq : {EquationKind::KdV, EquationKind::BO, EquationKind::ILW}) {
    const OperatorContext ctx(eq, rough(3), 10);
    const auto out = bilinear_driver(ctx, 0.2, 0.9, real_field(10, 4), real_field(10, 5));
    EXPECT_EQ(out[0], cplx{});
    for (int n = 1; n <= 10; ++n)
      EXPECT_LT(std::abs(out[-n] - std::conj(out[n])), 1e-12);
  }
}

TEST(Bilinear, MatchesDirectOracle)
{
  const auto path = rough(6, 129);
  const OperatorContext ctx(EquationKind::KdV, path, 6);
  const auto f1 = real_field(6, 7);
  const auto f2 = real_field(6, 8);
  const auto got = bilinear_driver(ctx, 0.15, 0.8, f1, f2);
  const auto want = oracle::kdv_bilinear(*path, 6, 0.15, 0.8, f1, f2);
  EXPECT_LT(oracle::max_abs_diff(got, want), 1e-10);
}

TEST(Bilinear, AdditiveInTimePair)
{
  for (auto eq : {EquationKind::KdV, EquationKind::BO, EquationKind::dNLS}) {
    const OperatorContext ctx(eq, rough(9), 8);
    const auto f1 = complex_field(8, 10);
    const auto f2 = complex_field(8, 11);
    auto split = bilinear_driver(ctx, 0.1, 0.45, f1, f2);
    split += bilinear_driver(ctx, 0.45, 0.95, f1, f2);
    EXPECT_LT(rel_diff(bilinear_driver(ctx, 0.1, 0.95, f1, f2), split), 1e-12);
  }
}

TEST(Bilinear, DegenerateIntervalIsZero)
{
  const OperatorContext ctx(EquationKind::BO, rough(12), 5);
  EXPECT_EQ(oracle::max_abs(bilinear_driver(ctx, 0.3, 0.3, real_field(5, 1), real_field(5, 2))), 0.0);
}

TEST(Bilinear, DnlsMultiplierIsReal)
{
  // dNLS: multiplier n instead of i n
  const OperatorContext ctx(EquationKind::dNLS, unit_line(), 4);
  const auto out = bilinear_driver(ctx, 0.0, 0.5, delta(4, 1), delta(4, 2));
  const cplx ph = oracle::phase(*ctx.path, 0.0, 0.5, 4.0);
  EXPECT_LT(std::abs(out[3] - 3.0 * ph), 1e-13);
}

TEST(Bilinear, RejectsWrongBandAndEquation)
{
  const OperatorContext ctx(EquationKind::KdV, unit_line(), 4);
  EXPECT_THROW(bilinear_driver(ctx, 0.0, 0.5, SpectralField(5), SpectralField(4)), std::invalid_argument);
  const OperatorContext nls(EquationKind::NLS, unit_line(), 4);
  EXPECT_THROW(bilinear_driver(nls, 0.0, 0.5, SpectralField(4), SpectralField(4)), std::invalid_argument);
  EXPECT_THROW(bilinear_driver(ctx, 0.5, 0.2, SpectralField(4), SpectralField(4)), std::out_of_range);
}

TEST(Trilinear, SingleModeHandValue)
{
  const auto path = rough(13);
  const OperatorContext ctx(EquationKind::KdV, path, 4);
  const double r = 0.25;
  const double t = 0.6;
  const auto out = trilinear_normal_form(ctx, r, t, delta(4, 1), delta(4, 1), delta(4, 1));
  const cplx want = -2.0 * 3.0 * 2.0 * phase_integral(*path, r, t, -18.0) * std::polar(1.0, -6.0 * path->value_at(r));
  EXPECT_LT(std::abs(out[3] - want), 1e-14);
  for (int n = -4; n <= 4; ++n)
    if (n != 3)
      EXPECT_EQ(out[n], cplx{});
}

TEST(Trilinear, ExcludesZeroIntermediateFrequency)
{
  // n1 = 1, n2 = -1 gives n12 = 0: no contribution
  const OperatorContext ctx(EquationKind::KdV, rough(14), 4);
  const auto out = trilinear_normal_form(ctx, 0.0, 0.5, delta(4, 1), delta(4, -1), delta(4, 2));
  EXPECT_EQ(oracle::max_abs(out), 0.0);
}

TEST(Trilinear, MatchesDirectOracle)
{
  const auto path = rough(15, 129);
  const OperatorContext ctx(EquationKind::KdV, path, 4);
  const auto f1 = real_field(4, 16);
  const auto f2 = real_field(4, 17);
  const auto f3 = real_field(4, 18);
  const auto got = trilinear_normal_form(ctx, 0.2, 0.7, f1, f2, f3);
  const auto want = oracle::kdv_trilinear(*path, 4, 0.2, 0.7, f1, f2, f3);
  EXPECT_LT(oracle::max_abs_diff(got, want), 1e-9);
}

TEST(Trilinear, HermitianZeroAndDegenerate)
{
  for (auto eq : {EquationKind::KdV, EquationKind::BO, EquationKind::ILW}) {
    const OperatorContext ctx(eq, rough(19), 8);
    const auto f = real_field(8, 20);
    const auto g = real_field(8, 21);
    const auto out = trilinear_normal_form(ctx, 0.3, 0.8, f, g, f);
    EXPECT_EQ(out[0], cplx{});
    for (int n = 1; n <= 8; ++n)
      EXPECT_LT(std::abs(out[-n] - std::conj(out[n])), 1e-12);
    EXPECT_EQ(oracle::max_abs(trilinear_normal_form(ctx, 0.3, 0.8, f, SpectralField(8), g)), 0.0);
    EXPECT_EQ(oracle::max_abs(trilinear_normal_form(ctx, 0.4, 0.4, f, g, f)), 0.0);
  }
}

// ---------------------------------------------------------------------------
// cubic NLS family

TEST(NlsTrilinear, ConstantFieldGivesZero)
{
  const OperatorContext ctx(EquationKind::NLS, rough(22), 4);
  const auto c = delta(4, 0);
  EXPECT_EQ(oracle::max_abs(trilinear_nonresonant_nls(ctx, 0.0, 0.9, c, c, c)), 0.0);
}

TEST(NlsTrilinear, SingleTerm)
{
  const auto path = rough(23);
  const OperatorContext ctx(EquationKind::NLS, path, 4);
  const auto out = trilinear_nonresonant_nls(ctx, 0.1, 0.6, delta(4, 1), delta(4, 0), delta(4, 2));
  const cplx want = cplx(0, -1) * oracle::phase(*path, 0.1, 0.6, 4.0);
  EXPECT_LT(std::abs(out[3] - want), 1e-10);
  for (int n = -4; n <= 4; ++n)
    if (n != 3)
      EXPECT_EQ(out[n], cplx{});
}

TEST(NlsTrilinear, ConjugateLinearInSecondSlot)
{
  const OperatorContext ctx(EquationKind::NLS, rough(24), 6);
  const auto f1 = complex_field(6, 25);
  const auto f2 = complex_field(6, 26);
  const auto f3 = complex_field(6, 27);
  SpectralField if2 = f2;
  for (auto& c : if2.coeffs())
    c *= cplx(0, 1);
  auto want = trilinear_nonresonant_nls(ctx, 0.2, 0.8, f1, f2, f3);
  for (auto& c : want.coeffs())
    c *= cplx(0, -1);
  EXPECT_LT(rel_diff(trilinear_nonresonant_nls(ctx, 0.2, 0.8, f1, if2, f3), want), 1e-14);
}

TEST(NlsTrilinear, MatchesDirectOracle)
{
  const auto path = rough(28, 129);
  const OperatorContext ctx(EquationKind::NLS, path, 4);
  const auto f1 = complex_field(4, 29);
  const auto f2 = complex_field(4, 30);
  const auto f3 = complex_field(4, 31);
  const auto got = trilinear_nonresonant_nls(ctx, 0.05, 0.55, f1, f2, f3);
  EXPECT_LT(oracle::max_abs_diff(got, oracle::nls_trilinear(*path, 4, 0.05, 0.55, f1, f2, f3)), 1e-10);
}

TEST(NlsTrilinear, AdditiveInTimePair)
{
  const OperatorContext ctx(EquationKind::NLS, rough(32), 6);
  const auto f1 = complex_field(6, 33);
  const auto f2 = complex_field(6, 34);
  const auto f3 = complex_field(6, 35);
  auto split = trilinear_nonresonant_nls(ctx, 0.0, 0.3, f1, f2, f3);
  split += trilinear_nonresonant_nls(ctx, 0.3, 1.0, f1, f2, f3);
  EXPECT_LT(rel_diff(trilinear_nonresonant_nls(ctx, 0.0, 1.0, f1, f2, f3), split), 1e-12);
}

TEST(ResonantCubic, PointwiseValue)
{
  const auto f = delta(3, 1, 2.0);
  const auto out = resonant_cubic(f, f, f);
  EXPECT_EQ(out[1], cplx(0, 8));
  EXPECT_EQ(oracle::max_abs(resonant_cubic(f, SpectralField(3), f)), 0.0);
}

TEST(ResonantCubic, NormBound)
{
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto f1 = random_field(8, FieldProfile::power_law(0.5), 3 * k + 1);
    const auto f2 = random_field(8, FieldProfile::white(), 3 * k + 2);
    const auto f3 = random_field(8, FieldProfile::power_law(1.0), 3 * k + 3);
    const double s = static_cast<double>(k % 4) * 0.5;
    const double lhs = sobolev_norm(resonant_cubic(f1, f2, f3), s);
    ASSERT_LE(lhs, (1 + 1e-14) * sobolev_norm(f1, s) * sobolev_norm(f2, s) * sobolev_norm(f3, s));
  }
}

// ---------------------------------------------------------------------------
// quintic operators

TEST(Quintic, NnMatchesFiveFoldLoop)
{
  const int N = 8;
  const auto path = rough(36);
  const OperatorContext ctx(EquationKind::NLS, path, N);
  const double r = 0.2;
  const double t = 0.7;
  std::vector<SpectralField> f;
  for (std::uint64_t k = 0; k < 5; ++k)
    f.push_back(complex_field(N, 40 + k));
  // the library phase supplies Phi; the oracle checks the summation structure
  std::map<double, cplx> memo;
  auto ph = [&](double a) {
    auto it = memo.find(a);
    if (it == memo.end())
      it = memo.emplace(a, phase_integral(*path, r, t, a)).first;
    return it->second;
  };
  const auto want = oracle::quintic_nn(N, path->value_at(r), ph, f[0], f[1], f[2], f[3], f[4]);
  const auto got = quintic_NN(ctx, r, t, f[0], f[1], f[2], f[3], f[4]);
  EXPECT_LT(oracle::max_abs_diff(got, want), 1e-11);
}

TEST(Quintic, NnZeroCases)
{
  const OperatorContext ctx(EquationKind::NLS, rough(37), 4);
  const auto c = delta(4, 0);
  EXPECT_EQ(oracle::max_abs(quintic_NN(ctx, 0.0, 0.5, c, c, c, c, c)), 0.0);
  const auto f = complex_field(4, 38);
  EXPECT_EQ(oracle::max_abs(quintic_NN(ctx, 0.0, 0.5, f, f, SpectralField(4), f, f)), 0.0);
}

TEST(Quintic, NrCompositionIdentity)
{
  const OperatorContext ctx(EquationKind::NLS, rough(39), 8);
  for (std::uint64_t k = 0; k < 5; ++k) {
    std::vector<SpectralField> f;
    for (std::uint64_t j = 0; j < 5; ++j)
      f.push_back(complex_field(8, 100 + 5 * k + j));
    const auto got = quintic_NR(ctx, 0.1, 0.9, f[0], f[1], f[2], f[3], f[4]);
    auto want = trilinear_nonresonant_nls(ctx, 0.1, 0.9, resonant_cubic(f[0], f[1], f[2]), f[3], f[4]);
    want += want;
    want += trilinear_nonresonant_nls(ctx, 0.1, 0.9, f[0], resonant_cubic(f[1], f[2], f[3]), f[4]);
    EXPECT_LT(oracle::max_abs_diff(got, want), 1e-11);
  }
}

TEST(Quintic, NrScalesPerSlot)
{
  const OperatorContext ctx(EquationKind::NLS, rough(40), 5);
  std::vector<SpectralField> f;
  for (std::uint64_t j = 0; j < 5; ++j)
    f.push_back(complex_field(5, 200 + j));
  const auto base = quintic_NR(ctx, 0.0, 0.4, f[0], f[1], f[2], f[3], f[4]);
  auto g = f[4];
  for (auto& c : g.coeffs())
    c *= 2.5;
  auto want = base;
  for (auto& c : want.coeffs())
    c *= 2.5;
  EXPECT_LT(rel_diff(quintic_NR(ctx, 0.0, 0.4, f[0], f[1], f[2], f[3], g), want), 1e-14);
  EXPECT_EQ(oracle::max_abs(quintic_NR(ctx, 0.0, 0.4, f[0], SpectralField(5), f[2], f[3], f[4])), 0.0);
}
