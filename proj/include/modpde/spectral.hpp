#pragma once

// Truncated Fourier fields on the circle, dispersion symbols and the
// modulated linear propagator.

#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpde/rng.hpp"

namespace modpde {

using cplx = std::complex<double>;

/// Coefficients c_n for |n| <= N. The flags declare constraints the field is
/// meant to satisfy; check_constraints() verifies them.
class SpectralField {
public:
  SpectralField() = default;

  explicit SpectralField(int max_mode, bool mean_zero = false, bool real_valued = false)
      : max_mode_(max_mode), coeffs_(static_cast<std::size_t>(2 * max_mode + 1)),
        mean_zero_(mean_zero), real_valued_(real_valued)
  {
    if (max_mode < 1)
      throw std::invalid_argument("SpectralField: max_mode must be >= 1");
  }

  int max_mode() const noexcept { return max_mode_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  bool mean_zero() const noexcept { return mean_zero_; }
  bool real_valued() const noexcept { return real_valued_; }
  void set_flags(bool mean_zero, bool real_valued) noexcept
  {
    mean_zero_ = mean_zero;
    real_valued_ = real_valued;
  }

  bool in_band(int n) const noexcept { return n >= -max_mode_ && n <= max_mode_; }

  cplx& operator[](int n) noexcept { return coeffs_[static_cast<std::size_t>(n + max_mode_)]; }
  const cplx& operator[](int n) const noexcept
  {
    return coeffs_[static_cast<std::size_t>(n + max_mode_)];
  }

  /// Zero outside the band.
  cplx at(int n) const noexcept { return in_band(n) ? (*this)[n] : cplx{}; }

  std::vector<cplx>& coeffs() noexcept { return coeffs_; }
  const std::vector<cplx>& coeffs() const noexcept { return coeffs_; }

  SpectralField& operator+=(const SpectralField& o)
  {
    require_same_band(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o)
  {
    require_same_band(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(cplx s) noexcept
  {
    for (auto& c : coeffs_)
      c *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

  void require_same_band(const SpectralField& o) const
  {
    if (o.max_mode_ != max_mode_)
      throw std::invalid_argument("SpectralField: mismatched max_mode");
  }

  /// Largest violation of the declared constraints.
  double constraint_violation() const noexcept
  {
    double worst = 0.0;
    if (mean_zero_)
      worst = std::abs((*this)[0]);
    if (real_valued_)
      for (int n = 0; n <= max_mode_; ++n)
        worst = std::max(worst, std::abs((*this)[-n] - std::conj((*this)[n])));
    return worst;
  }

  bool check_constraints(double tol = 0.0) const noexcept { return constraint_violation() <= tol; }

  /// Projects onto the declared constraints (c_0 = 0, Hermitian symmetry).
  void enforce_constraints() noexcept
  {
    if (real_valued_)
      for (int n = 0; n <= max_mode_; ++n) {
        const cplx avg = 0.5 * ((*this)[n] + std::conj((*this)[-n]));
        (*this)[n] = avg;
        (*this)[-n] = std::conj(avg);
      }
    if (mean_zero_)
      (*this)[0] = 0.0;
  }

  bool operator==(const SpectralField& o) const = default;

private:
  int max_mode_ = 0;
  std::vector<cplx> coeffs_;
  bool mean_zero_ = false;
  bool real_valued_ = false;
};

/// Symbol families; ILW carries its depth.
enum class SymbolKind { KdV, BO, ILW, Schrodinger };

struct DispersionSymbol {
  SymbolKind kind = SymbolKind::KdV;
  double depth = 1.0; // ILW only

  static DispersionSymbol kdv() { return {SymbolKind::KdV, 1.0}; }
  static DispersionSymbol bo() { return {SymbolKind::BO, 1.0}; }
  static DispersionSymbol ilw(double delta)
  {
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw std::invalid_argument("ILW depth must be positive and finite");
    return {SymbolKind::ILW, delta};
  }
  static DispersionSymbol schrodinger() { return {SymbolKind::Schrodinger, 1.0}; }

  bool is_odd() const noexcept { return kind != SymbolKind::Schrodinger; }
};

namespace detail {

/// coth(x) for x > 0, stable for small x (expm1) and large x (no overflow).
inline double coth_positive(double x)
{
  if (x > 20.0)
    return 1.0 + 2.0 * std::exp(-2.0 * x) / (1.0 - std::exp(-2.0 * x));
  return 1.0 + 2.0 / std::expm1(2.0 * x);
}

} // namespace detail

/// Real symbol phi(n); the propagator multiplies c_n by exp(i w phi(n)).
inline double dispersion_value(const DispersionSymbol& sym, long long n)
{
  const double x = static_cast<double>(n);
  switch (sym.kind) {
  case SymbolKind::KdV:
    return x * x * x;
  case SymbolKind::BO:
    return std::abs(x) * x;
  case SymbolKind::ILW: {
    if (n == 0)
      return 0.0;
    const double ax = std::abs(x);
    // n^2 coth(delta n) - n / delta, odd in n
    const double even_part = ax * ax * detail::coth_positive(sym.depth * ax) - ax / sym.depth;
    return n > 0 ? even_part : -even_part;
  }
  case SymbolKind::Schrodinger:
    return -x * x;
  }
  return 0.0;
}

/// Multiplies c_n by exp(+i w phi(n)) (forward) or exp(-i w phi(n)) (inverse).
inline SpectralField propagator_apply(const SpectralField& field, const DispersionSymbol& sym,
                                      double w_value, bool inverse = false)
{
  SpectralField out = field;
  if (w_value == 0.0)
    return out;
  const double sign = inverse ? -1.0 : 1.0;
  const int N = field.max_mode();
  for (int n = -N; n <= N; ++n) {
    const double ph = sign * w_value * dispersion_value(sym, n);
    out[n] *= cplx(std::cos(ph), std::sin(ph));
  }
  if (!sym.is_odd())
    out.set_flags(field.mean_zero(), false);
  return out;
}

inline double japanese_bracket(double n) { return std::sqrt(1.0 + n * n); }

/// (sum_n (1 + n^2)^s |c_n|^2)^{1/2}
inline double sobolev_norm(const SpectralField& f, double s)
{
  double acc = 0.0;
  const int N = f.max_mode();
  for (int n = -N; n <= N; ++n) {
    const double w = s == 0.0 ? 1.0 : std::pow(1.0 + static_cast<double>(n) * n, s);
    acc += w * std::norm(f[n]);
  }
  return std::sqrt(acc);
}

inline double l2_norm(const SpectralField& f) { return sobolev_norm(f, 0.0); }

inline double l2_distance(const SpectralField& a, const SpectralField& b)
{
  return l2_norm(a - b);
}

// ---------------------------------------------------------------------------
// Test-data generation

enum class ProfileKind { White, PowerLaw, SingleMode };

struct FieldProfile {
  ProfileKind kind = ProfileKind::White;
  double alpha = 1.0; // power-law exponent, |c_n| = <n>^{-alpha}
  int mode = 1;       // single-mode frequency

  static FieldProfile white() { return {ProfileKind::White, 0.0, 0}; }
  static FieldProfile power_law(double alpha) { return {ProfileKind::PowerLaw, alpha, 0}; }
  static FieldProfile single_mode(int k) { return {ProfileKind::SingleMode, 0.0, k}; }
};

struct FieldConstraints {
  bool mean_zero = false;
  bool real_valued = false;
};

/// Random field with the given amplitude profile; phases (and white-noise
/// amplitudes) drawn from Rng(seed). Single-mode fields are deterministic:
/// c_k = 1, or c_k = c_{-k} = 1/2 for real fields.
inline SpectralField random_field(int max_mode, const FieldProfile& profile, std::uint64_t seed,
                                  FieldConstraints constraints = {})
{
  SpectralField f(max_mode, constraints.mean_zero, constraints.real_valued);
  const int N = max_mode;
  if (profile.kind == ProfileKind::SingleMode) {
    const int k = profile.mode;
    if (!f.in_band(k))
      throw std::invalid_argument("random_field: single mode outside band");
    if (constraints.mean_zero && k == 0)
      throw std::invalid_argument("random_field: single mode 0 violates mean_zero");
    if (constraints.real_valued && k != 0) {
      f[k] += 0.5;
      f[-k] += 0.5;
    } else {
      f[k] = 1.0;
    }
    return f;
  }

  Rng rng(seed);
  const int lo = constraints.real_valued ? 0 : -N;
  for (int n = lo; n <= N; ++n) {
    cplx c;
    if (profile.kind == ProfileKind::White) {
      const double re = rng.normal();
      const double im = rng.normal();
      c = cplx(re, im) / std::sqrt(2.0);
    } else {
      const double amp = std::pow(japanese_bracket(n), -profile.alpha);
      const double ph = 2.0 * std::numbers::pi * rng.uniform();
      c = amp * cplx(std::cos(ph), std::sin(ph));
    }
    if (constraints.real_valued) {
      if (n == 0) {
        f[0] = std::abs(c) * (c.real() < 0 ? -1.0 : 1.0);
      } else {
        f[n] = c;
        f[-n] = std::conj(c);
      }
    } else {
      f[n] = c;
    }
  }
  if (constraints.mean_zero)
    f[0] = 0.0;
  return f;
}

/// Rescales f to unit H^s norm (no-op on the zero field).
inline SpectralField normalized(SpectralField f, double s = 0.0)
{
  const double norm = sobolev_norm(f, s);
  if (norm > 0.0)
    f *= 1.0 / norm;
  return f;
}

// ---------------------------------------------------------------------------
// Text I/O: header "# specfield v1 N=<N> flags=<mz,rv|mz|rv|none>",
// then rows "<n> <Re c_n> <Im c_n>" for n = -N..N.

inline std::string flags_token(const SpectralField& f)
{
  if (f.mean_zero() && f.real_valued())
    return "mz,rv";
  if (f.mean_zero())
    return "mz";
  if (f.real_valued())
    return "rv";
  return "none";
}

inline void write_field(std::ostream& os, const SpectralField& f)
{
  os.precision(17);
  os << "# specfield v1 N=" << f.max_mode() << " flags=" << flags_token(f) << '\n';
  for (int n = -f.max_mode(); n <= f.max_mode(); ++n)
    os << n << ' ' << f[n].real() << ' ' << f[n].imag() << '\n';
}

inline SpectralField read_field(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line) || line.rfind("# specfield v1 ", 0) != 0)
    throw std::runtime_error("read_field: missing '# specfield v1' header");
  std::istringstream hdr(line.substr(std::string("# specfield v1 ").size()));
  std::string tok;
  int N = -1;
  std::string flags;
  while (hdr >> tok) {
    if (tok.rfind("N=", 0) == 0)
      N = std::stoi(tok.substr(2));
    else if (tok.rfind("flags=", 0) == 0)
      flags = tok.substr(6);
  }
  if (N < 1)
    throw std::runtime_error("read_field: bad N in header");
  const bool mz = flags.find("mz") != std::string::npos;
  const bool rv = flags.find("rv") != std::string::npos;
  SpectralField f(N, mz, rv);
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream row(line);
    int n = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(row >> n >> re >> im) || !f.in_band(n))
      throw std::runtime_error("read_field: malformed row '" + line + "'");
    f[n] = cplx(re, im);
    ++rows;
  }
  if (rows != 2 * N + 1)
    throw std::runtime_error("read_field: expected 2N+1 rows");
  return f;
}

} // namespace modpde
