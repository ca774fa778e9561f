#pragma once

// Resonance functions and the multilinear drivers / normal-form operators in
// interaction variables. Every operator is a direct frequency sum weighted by
// phase integrals Phi_{t,r}(Xi) of the modulation path.

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "modpde/modulation.hpp"
#include "modpde/spectral.hpp"

namespace modpde {

enum class EquationKind { KdV, BO, ILW, dNLS, NLS };

inline std::string to_string(EquationKind eq)
{
  switch (eq) {
  case EquationKind::KdV:
    return "kdv";
  case EquationKind::BO:
    return "bo";
  case EquationKind::ILW:
    return "ilw";
  case EquationKind::dNLS:
    return "dnls";
  case EquationKind::NLS:
    return "nls";
  }
  return "?";
}

inline EquationKind parse_equation(const std::string& s)
{
  if (s == "kdv")
    return EquationKind::KdV;
  if (s == "bo")
    return EquationKind::BO;
  if (s == "ilw")
    return EquationKind::ILW;
  if (s == "dnls")
    return EquationKind::dNLS;
  if (s == "nls")
    return EquationKind::NLS;
  throw std::invalid_argument("unknown equation kind '" + s + "'");
}

/// True for the equations with a quadratic derivative nonlinearity d_x(u^2).
constexpr bool is_quadratic(EquationKind eq) noexcept { return eq != EquationKind::NLS; }

/// Mean-zero data is required by the quadratic equations.
constexpr bool requires_mean_zero(EquationKind eq) noexcept { return is_quadratic(eq); }

inline DispersionSymbol symbol_for(EquationKind eq, double ilw_depth = 1.0)
{
  switch (eq) {
  case EquationKind::KdV:
    return DispersionSymbol::kdv();
  case EquationKind::BO:
    return DispersionSymbol::bo();
  case EquationKind::ILW:
    return DispersionSymbol::ilw(ilw_depth);
  case EquationKind::dNLS:
  case EquationKind::NLS:
    return DispersionSymbol::schrodinger();
  }
  return DispersionSymbol::kdv();
}

/// Equation, modulation path, symbol and truncation shared by all operator calls.
struct OperatorContext {
  EquationKind equation = EquationKind::KdV;
  std::shared_ptr<const ModulationPath> path;
  DispersionSymbol symbol;
  int max_mode = 0;

  OperatorContext(EquationKind eq, std::shared_ptr<const ModulationPath> p, int N,
                  double ilw_depth = 1.0)
      : equation(eq), path(std::move(p)), symbol(symbol_for(eq, ilw_depth)), max_mode(N)
  {
    if (!path)
      throw std::invalid_argument("OperatorContext: null path");
    if (N < 1)
      throw std::invalid_argument("OperatorContext: max_mode must be >= 1");
  }

  OperatorContext(EquationKind eq, std::shared_ptr<const ModulationPath> p, DispersionSymbol sym,
                  int N)
      : equation(eq), path(std::move(p)), symbol(sym), max_mode(N)
  {
    if (!path)
      throw std::invalid_argument("OperatorContext: null path");
    if (N < 1)
      throw std::invalid_argument("OperatorContext: max_mode must be >= 1");
    if (symbol.kind != symbol_for(eq, sym.depth).kind)
      throw std::invalid_argument("OperatorContext: symbol kind does not match equation");
  }

  double horizon() const noexcept { return path->horizon(); }
  double w(double t) const { return path->value_at(t); }
};

// ---------------------------------------------------------------------------
// Resonance functions

/// -phi(n) + phi(n1) + phi(n2)
inline double resonance_quadratic(const DispersionSymbol& sym, long long n, long long n1,
                                  long long n2)
{
  return -dispersion_value(sym, n) + dispersion_value(sym, n1) + dispersion_value(sym, n2);
}

/// n^2 - n1^2 + n2^2 - n3^2
constexpr long long resonance_cubic_nls(long long n, long long n1, long long n2,
                                        long long n3) noexcept
{
  return n * n - n1 * n1 + n2 * n2 - n3 * n3;
}

/// Multiplier of the quadratic driver: i n for KdV/BO/ILW, n for dNLS.
inline cplx quadratic_multiplier(EquationKind eq, long long n)
{
  const double x = static_cast<double>(n);
  return eq == EquationKind::dNLS ? cplx(x, 0.0) : cplx(0.0, x);
}

// ---------------------------------------------------------------------------
// Phase sources

/// Phi_{t,r}(a) evaluated directly on the path, memoized by a for one (r, t).
class DirectPhase {
public:
  DirectPhase(const ModulationPath& path, double r, double t) : path_(&path), r_(r), t_(t)
  {
    if (!(r >= 0.0) || !(t <= path.horizon()) || !(r <= t))
      throw std::out_of_range("phase: need 0 <= r <= t <= T");
  }

  cplx operator()(double a)
  {
    if (r_ == t_)
      return {};
    auto it = memo_.find(a);
    if (it != memo_.end())
      return it->second;
    const cplx v = phase_integral(*path_, r_, t_, a);
    memo_.emplace(a, v);
    return v;
  }

  bool degenerate() const noexcept { return r_ == t_; }

private:
  const ModulationPath* path_;
  double r_;
  double t_;
  std::unordered_map<double, cplx> memo_;
};

inline cplx unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

namespace detail {

inline void require_band(const OperatorContext& ctx, const SpectralField& f)
{
  if (f.max_mode() != ctx.max_mode)
    throw std::invalid_argument("operator input max_mode does not match the context");
}

inline void require_quadratic(const OperatorContext& ctx, const char* op)
{
  if (!is_quadratic(ctx.equation))
    throw std::invalid_argument(std::string(op) + ": needs KdV, BO, ILW or dNLS");
}

inline void require_nls(const OperatorContext& ctx, const char* op)
{
  if (ctx.equation != EquationKind::NLS)
    throw std::invalid_argument(std::string(op) + ": needs the cubic NLS context");
}

/// Output flags of a quadratic-family operator: mean zero, real iff inputs
/// real and the symbol odd.
inline SpectralField quadratic_output(const OperatorContext& ctx, bool inputs_real)
{
  const bool real = inputs_real && ctx.symbol.is_odd() && ctx.equation != EquationKind::dNLS;
  return SpectralField(ctx.max_mode, true, real);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Quadratic family (KdV, BO, ILW, dNLS)

/// X_{t,r}(f1, f2) with a caller-supplied phase source.
template <class Phase>
SpectralField bilinear_driver_with(const OperatorContext& ctx, Phase&& phase,
                                   const SpectralField& f1, const SpectralField& f2)
{
  detail::require_quadratic(ctx, "bilinear_driver");
  detail::require_band(ctx, f1);
  detail::require_band(ctx, f2);
  SpectralField out = detail::quadratic_output(ctx, f1.real_valued() && f2.real_valued());
  const int N = ctx.max_mode;
  for (int n = -N; n <= N; ++n) {
    if (n == 0)
      continue;
    cplx acc{};
    for (int n1 = std::max(-N, n - N); n1 <= std::min(N, n + N); ++n1) {
      const int n2 = n - n1;
      if (n1 == 0 || n2 == 0)
        continue;
      const cplx p = f1[n1] * f2[n2];
      if (p == cplx{})
        continue;
      acc += phase(resonance_quadratic(ctx.symbol, n, n1, n2)) * p;
    }
    out[n] = quadratic_multiplier(ctx.equation, n) * acc;
  }
  return out;
}

/// X_{t,r}(f1, f2)(n) = mu(n) sum_{n1+n2=n, n1,n2 != 0} Phi_{t,r}(Xi(n,n1,n2)) f1(n1) f2(n2).
inline SpectralField bilinear_driver(const OperatorContext& ctx, double r, double t,
                                     const SpectralField& f1, const SpectralField& f2)
{
  DirectPhase phase(*ctx.path, r, t);
  return bilinear_driver_with(ctx, phase, f1, f2);
}

/// Inner quadratic interaction at the left endpoint r:
///   B(m) = sum_{n1+n2=m, n1,n2 != 0} exp(i Xi(m,n1,n2) w(r)) f1(n1) f2(n2),  |m| <= 2N.
/// Indexed by m + 2N.
inline std::vector<cplx> quadratic_interaction(const OperatorContext& ctx, double w_r,
                                               const SpectralField& f1, const SpectralField& f2)
{
  const int N = ctx.max_mode;
  std::vector<cplx> B(static_cast<std::size_t>(4 * N + 1));
  for (int m = -2 * N; m <= 2 * N; ++m) {
    if (m == 0)
      continue;
    cplx acc{};
    for (int n1 = std::max(-N, m - N); n1 <= std::min(N, m + N); ++n1) {
      const int n2 = m - n1;
      if (n1 == 0 || n2 == 0)
        continue;
      const cplx p = f1[n1] * f2[n2];
      if (p == cplx{})
        continue;
      acc += unit_phase(resonance_quadratic(ctx.symbol, m, n1, n2) * w_r) * p;
    }
    B[static_cast<std::size_t>(m + 2 * N)] = acc;
  }
  return B;
}

/// Trilinear normal-form operator with a caller-supplied phase source for (r, t):
///   N(n) = 2 mu(n) sum_{n = n12 + n3} mu(n12) Phi(Xi(n, n12, n3)) exp(i Xi(n12,n1,n2) w(r))
///          f1(n1) f2(n2) f3(n3),   n1, n2, n3, n12 != 0.
/// With mu(n) = i n this is the coefficient -2 n n12 of the KdV/BO/ILW reduction.
template <class Phase>
SpectralField trilinear_normal_form_with(const OperatorContext& ctx, Phase&& phase, double r,
                                         const SpectralField& f1, const SpectralField& f2,
                                         const SpectralField& f3)
{
  detail::require_quadratic(ctx, "trilinear_normal_form");
  detail::require_band(ctx, f1);
  detail::require_band(ctx, f2);
  detail::require_band(ctx, f3);
  SpectralField out = detail::quadratic_output(
      ctx, f1.real_valued() && f2.real_valued() && f3.real_valued());
  const int N = ctx.max_mode;
  const auto B = quadratic_interaction(ctx, ctx.w(r), f1, f2);
  for (int n = -N; n <= N; ++n) {
    if (n == 0)
      continue;
    cplx acc{};
    for (int n3 = -N; n3 <= N; ++n3) {
      const int m = n - n3;
      if (n3 == 0 || m == 0)
        continue;
      const cplx b = B[static_cast<std::size_t>(m + 2 * N)];
      if (b == cplx{} || f3[n3] == cplx{})
        continue;
      acc += quadratic_multiplier(ctx.equation, m) * phase(resonance_quadratic(ctx.symbol, n, m, n3)) *
             b * f3[n3];
    }
    out[n] = 2.0 * quadratic_multiplier(ctx.equation, n) * acc;
  }
  return out;
}

inline SpectralField trilinear_normal_form(const OperatorContext& ctx, double r, double t,
                                           const SpectralField& f1, const SpectralField& f2,
                                           const SpectralField& f3)
{
  DirectPhase phase(*ctx.path, r, t);
  if (phase.degenerate())
    return detail::quadratic_output(ctx, f1.real_valued() && f2.real_valued() && f3.real_valued());
  return trilinear_normal_form_with(ctx, phase, r, f1, f2, f3);
}

// ---------------------------------------------------------------------------
// Renormalized cubic NLS

/// X^NLS_{t,r}(f1,f2,f3)(n) = -i sum_{n = n1-n2+n3, n != n1, n3} Phi(Xi) f1(n1) conj(f2(n2)) f3(n3).
template <class Phase>
SpectralField trilinear_nonresonant_nls_with(const OperatorContext& ctx, Phase&& phase,
                                             const SpectralField& f1, const SpectralField& f2,
                                             const SpectralField& f3)
{
  detail::require_nls(ctx, "trilinear_nonresonant_nls");
  detail::require_band(ctx, f1);
  detail::require_band(ctx, f2);
  detail::require_band(ctx, f3);
  const int N = ctx.max_mode;
  SpectralField out(N);
  for (int n = -N; n <= N; ++n) {
    cplx acc{};
    for (int n1 = -N; n1 <= N; ++n1) {
      if (n1 == n || f1[n1] == cplx{})
        continue;
      for (int n2 = -N; n2 <= N; ++n2) {
        const int n3 = n - n1 + n2;
        if (n3 < -N || n3 > N || n3 == n)
          continue;
        const cplx p = f1[n1] * std::conj(f2[n2]) * f3[n3];
        if (p == cplx{})
          continue;
        acc += phase(static_cast<double>(resonance_cubic_nls(n, n1, n2, n3))) * p;
      }
    }
    out[n] = cplx(0.0, -1.0) * acc;
  }
  return out;
}

inline SpectralField trilinear_nonresonant_nls(const OperatorContext& ctx, double r, double t,
                                               const SpectralField& f1, const SpectralField& f2,
                                               const SpectralField& f3)
{
  DirectPhase phase(*ctx.path, r, t);
  return trilinear_nonresonant_nls_with(ctx, phase, f1, f2, f3);
}

/// Pointwise resonant cubic term: i f1(n) conj(f2(n)) f3(n).
inline SpectralField resonant_cubic(const SpectralField& f1, const SpectralField& f2,
                                    const SpectralField& f3)
{
  f1.require_same_band(f2);
  f1.require_same_band(f3);
  const int N = f1.max_mode();
  SpectralField out(N);
  for (int n = -N; n <= N; ++n)
    out[n] = cplx(0.0, 1.0) * f1[n] * std::conj(f2[n]) * f3[n];
  return out;
}

namespace detail {

/// C(m) = sum_{m = n1-n2+n3, m != n1, n3} exp(sign i Xi(m,n1,n2,n3) w_r) g1(n1) conj(g2(n2)) g3(n3),
/// |m| <= 3N, indexed by m + 3N.
inline std::vector<cplx> cubic_interaction(int N, double w_r, double sign, const SpectralField& g1,
                                           const SpectralField& g2, const SpectralField& g3)
{
  std::vector<cplx> C(static_cast<std::size_t>(6 * N + 1));
  for (int n1 = -N; n1 <= N; ++n1) {
    if (g1[n1] == cplx{})
      continue;
    for (int n2 = -N; n2 <= N; ++n2) {
      const cplx p12 = g1[n1] * std::conj(g2[n2]);
      if (p12 == cplx{})
        continue;
      for (int n3 = -N; n3 <= N; ++n3) {
        const int m = n1 - n2 + n3;
        if (m == n1 || m == n3 || g3[n3] == cplx{})
          continue;
        const double xi = static_cast<double>(resonance_cubic_nls(m, n1, n2, n3));
        C[static_cast<std::size_t>(m + 3 * N)] += unit_phase(sign * xi * w_r) * p12 * g3[n3];
      }
    }
  }
  return C;
}

} // namespace detail

/// Quintilinear operator NN_{t,r} = I + II (phase source for (r, t), w(r) supplied).
template <class Phase>
SpectralField quintic_NN_with(const OperatorContext& ctx, Phase&& phase, double r,
                              const SpectralField& f1, const SpectralField& f2,
                              const SpectralField& f3, const SpectralField& f4,
                              const SpectralField& f5)
{
  detail::require_nls(ctx, "quintic_NN");
  for (const SpectralField* f : {&f1, &f2, &f3, &f4, &f5})
    detail::require_band(ctx, *f);
  const int N = ctx.max_mode;
  const double w_r = ctx.w(r);
  SpectralField out(N);

  // I: -2 sum Phi(Xi(n, m, n4, n5)) exp(i Xi(m, n1, n2, n3) w(r)) ..., m = n123*
  const auto C = detail::cubic_interaction(N, w_r, +1.0, f1, f2, f3);
  // II: sum Phi(Xi(n, n1, m, n5)) exp(-i Xi(m, n2, n3, n4) w(r)) ..., m = n234*.
  // The inner sum conj(f2) f3 conj(f4) exp(-i Xi w) is the conjugate of the
  // forward interaction built from (f2, f3, f4).
  auto D = detail::cubic_interaction(N, w_r, +1.0, f2, f3, f4);
  for (auto& d : D)
    d = std::conj(d);

  for (int n = -N; n <= N; ++n) {
    cplx acc{};
    for (int m = -3 * N; m <= 3 * N; ++m) {
      const cplx c = C[static_cast<std::size_t>(m + 3 * N)];
      if (m == n || c == cplx{})
        continue;
      for (int n4 = -N; n4 <= N; ++n4) {
        const int n5 = n - m + n4;
        if (n5 < -N || n5 > N || n5 == n)
          continue;
        const cplx p = c * std::conj(f4[n4]) * f5[n5];
        if (p == cplx{})
          continue;
        acc += -2.0 * phase(static_cast<double>(resonance_cubic_nls(n, m, n4, n5))) * p;
      }
    }
    for (int n1 = -N; n1 <= N; ++n1) {
      if (n1 == n || f1[n1] == cplx{})
        continue;
      for (int m = -3 * N; m <= 3 * N; ++m) {
        const int n5 = n - n1 + m;
        if (n5 < -N || n5 > N || n5 == n)
          continue;
        const cplx d = D[static_cast<std::size_t>(m + 3 * N)];
        const cplx p = f1[n1] * d * f5[n5];
        if (p == cplx{})
          continue;
        acc += phase(static_cast<double>(resonance_cubic_nls(n, n1, m, n5))) * p;
      }
    }
    out[n] = acc;
  }
  return out;
}

inline SpectralField quintic_NN(const OperatorContext& ctx, double r, double t,
                                const SpectralField& f1, const SpectralField& f2,
                                const SpectralField& f3, const SpectralField& f4,
                                const SpectralField& f5)
{
  DirectPhase phase(*ctx.path, r, t);
  if (phase.degenerate())
    return SpectralField(ctx.max_mode);
  return quintic_NN_with(ctx, phase, r, f1, f2, f3, f4, f5);
}

/// Quintilinear operator NR_{t,r}:
///   2 sum_{n = n1-n4+n5, n != n1, n5} Phi(Xi(n,n1,n4,n5)) f1 conj(f2) f3 (n1) conj(f4(n4)) f5(n5)
///   - sum_{n = n1-n2+n5, n != n1, n5} Phi(Xi(n,n1,n2,n5)) f1(n1) conj(f2) f3 conj(f4) (n2) f5(n5)
template <class Phase>
SpectralField quintic_NR_with(const OperatorContext& ctx, Phase&& phase, const SpectralField& f1,
                              const SpectralField& f2, const SpectralField& f3,
                              const SpectralField& f4, const SpectralField& f5)
{
  detail::require_nls(ctx, "quintic_NR");
  for (const SpectralField* f : {&f1, &f2, &f3, &f4, &f5})
    detail::require_band(ctx, *f);
  const int N = ctx.max_mode;
  SpectralField out(N);
  for (int n = -N; n <= N; ++n) {
    cplx acc{};
    for (int n1 = -N; n1 <= N; ++n1) {
      if (n1 == n)
        continue;
      const cplx a123 = f1[n1] * std::conj(f2[n1]) * f3[n1];
      for (int nm = -N; nm <= N; ++nm) {
        const int n5 = n - n1 + nm;
        if (n5 < -N || n5 > N || n5 == n)
          continue;
        const double xi = static_cast<double>(resonance_cubic_nls(n, n1, nm, n5));
        const cplx first = 2.0 * a123 * std::conj(f4[nm]) * f5[n5];
        const cplx second = f1[n1] * std::conj(f2[nm]) * f3[nm] * std::conj(f4[nm]) * f5[n5];
        const cplx p = first - second;
        if (p == cplx{})
          continue;
        acc += phase(xi) * p;
      }
    }
    out[n] = acc;
  }
  return out;
}

inline SpectralField quintic_NR(const OperatorContext& ctx, double r, double t,
                                const SpectralField& f1, const SpectralField& f2,
                                const SpectralField& f3, const SpectralField& f4,
                                const SpectralField& f5)
{
  DirectPhase phase(*ctx.path, r, t);
  return quintic_NR_with(ctx, phase, f1, f2, f3, f4, f5);
}

} // namespace modpde
