#pragma once

// Rough modulation paths w on [0, T], the oscillatory phase integral
//   Phi_{t,r}(a) = int_r^t exp(i a w(s)) ds
// evaluated exactly on the piecewise-linear interpolant, fractional Brownian
// motion sampling, and grid estimators of (rho, gamma)-irregularity.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fftw3.h>

#include "modpde/rng.hpp"

namespace modpde {

using cplx = std::complex<double>;

/// Uniformly sampled path w_0..w_M on nodes t_k = k T / M, normalized so w_0 = 0.
class ModulationPath {
public:
  ModulationPath(std::vector<double> values, double horizon)
      : values_(std::move(values)), horizon_(horizon)
  {
    if (values_.size() < 2)
      throw std::invalid_argument("ModulationPath: need at least 2 samples");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
      throw std::invalid_argument("ModulationPath: horizon must be positive and finite");
    for (double v : values_)
      if (!std::isfinite(v))
        throw std::invalid_argument("ModulationPath: non-finite sample");
    const double w0 = values_.front();
    for (double& v : values_)
      v -= w0;
    step_ = horizon_ / static_cast<double>(segment_count());
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t sample_count() const noexcept { return values_.size(); }
  std::size_t segment_count() const noexcept { return values_.size() - 1; }
  double step() const noexcept { return step_; }
  std::span<const double> values() const noexcept { return values_; }

  double node_time(std::size_t k) const noexcept
  {
    return k == segment_count() ? horizon_ : static_cast<double>(k) * step_;
  }

  /// Index of the segment [t_k, t_{k+1}] containing s (the last one for s = T).
  std::size_t segment_of(double s) const noexcept
  {
    if (s <= 0.0)
      return 0;
    const auto k = static_cast<std::size_t>(s / step_);
    return std::min(k, segment_count() - 1);
  }

  /// Piecewise-linear interpolant.
  double value_at(double s) const
  {
    if (s < 0.0 || s > horizon_)
      throw std::out_of_range("ModulationPath::value_at: time outside [0, T]");
    const std::size_t k = segment_of(s);
    const double t0 = node_time(k);
    const double theta = (s - t0) / step_;
    return values_[k] + (values_[k + 1] - values_[k]) * theta;
  }

private:
  std::vector<double> values_;
  double horizon_;
  double step_ = 0.0;
};

inline ModulationPath from_samples(std::vector<double> values, double horizon)
{
  return ModulationPath(std::move(values), horizon);
}

/// Straight path w(t) = slope * t sampled with the given number of samples.
inline ModulationPath linear_path(double slope, double horizon, std::size_t sample_count = 2)
{
  if (sample_count < 2)
    throw std::invalid_argument("linear_path: need at least 2 samples");
  std::vector<double> v(sample_count);
  for (std::size_t k = 0; k < sample_count; ++k)
    v[k] = slope * horizon * static_cast<double>(k) / static_cast<double>(sample_count - 1);
  return ModulationPath(std::move(v), horizon);
}

namespace detail {

// Below this |a dw| the segment factor (e^{z}-1)/z is replaced by its Taylor series.
inline constexpr double kSeriesSwitch = 1e-6;

/// (exp(i theta) - 1) / (i theta) without cancellation.
inline cplx expm1_ratio(double theta) noexcept
{
  if (std::abs(theta) < kSeriesSwitch) {
    const double t2 = theta * theta;
    return {1.0 - t2 / 6.0, theta / 2.0 - theta * t2 / 24.0};
  }
  const double s = std::sin(0.5 * theta);
  // e^{i th} - 1 = -2 sin^2(th/2) + i sin(th)
  const cplx num(-2.0 * s * s, std::sin(theta));
  return num / cplx(0.0, theta);
}

/// Integral of exp(i a w) over a piece of length dt on which w goes linearly w0 -> w1.
inline cplx linear_piece(double a, double dt, double w0, double w1) noexcept
{
  const double ph = a * w0;
  return dt * cplx(std::cos(ph), std::sin(ph)) * expm1_ratio(a * (w1 - w0));
}

} // namespace detail

/// Phi_{t,r}(a) for the piecewise-linear interpolant; closed form per segment.
inline cplx phase_integral(const ModulationPath& path, double r, double t, double a)
{
  if (!(r >= 0.0) || !(t <= path.horizon()) || !(r <= t))
    throw std::out_of_range("phase_integral: need 0 <= r <= t <= T");
  if (r == t)
    return {0.0, 0.0};
  if (a == 0.0)
    return {t - r, 0.0};
  const auto w = path.values();
  std::size_t k = path.segment_of(r);
  const std::size_t k_end = path.segment_of(t);
  cplx acc{0.0, 0.0};
  double lo = r;
  double w_lo = path.value_at(r);
  for (; k <= k_end; ++k) {
    const double seg_hi = path.node_time(k + 1);
    const double hi = std::min(t, seg_hi);
    const double w_hi = (hi == seg_hi) ? w[k + 1] : path.value_at(hi);
    if (hi > lo)
      acc += detail::linear_piece(a, hi - lo, w_lo, w_hi);
    lo = hi;
    w_lo = w_hi;
  }
  return acc;
}

/// Cumulative phase F(s) = Phi_{s,0}(a) for one frequency a, built from a
/// prefix sum over whole segments so that F(s) does not depend on which other
/// times are queried.
class CumulativePhase {
public:
  CumulativePhase(const ModulationPath& path, double a) : path_(&path), a_(a)
  {
    const auto w = path.values();
    prefix_.resize(path.segment_count() + 1);
    prefix_[0] = 0.0;
    for (std::size_t k = 0; k < path.segment_count(); ++k) {
      const double dt = path.node_time(k + 1) - path.node_time(k);
      prefix_[k + 1] = prefix_[k] + (a == 0.0 ? cplx(dt, 0.0) : detail::linear_piece(a, dt, w[k], w[k + 1]));
    }
  }

  double frequency() const noexcept { return a_; }

  cplx at(double s) const
  {
    if (s < 0.0 || s > path_->horizon())
      throw std::out_of_range("CumulativePhase::at: time outside [0, T]");
    const std::size_t k = path_->segment_of(s);
    const double t0 = path_->node_time(k);
    if (s == t0)
      return prefix_[k];
    if (a_ == 0.0)
      return prefix_[k] + cplx(s - t0, 0.0);
    const auto w = path_->values();
    return prefix_[k] + detail::linear_piece(a_, s - t0, w[k], path_->value_at(s));
  }

private:
  const ModulationPath* path_;
  double a_;
  std::vector<cplx> prefix_;
};

namespace detail {

/// Calls fn(dt, w_lo, w_hi) for each linear piece of the path inside [r, t].
template <class Fn>
void for_each_piece(const ModulationPath& path, double r, double t, Fn&& fn)
{
  if (!(r < t))
    return;
  const auto w = path.values();
  std::size_t k = path.segment_of(r);
  double lo = r;
  double w_lo = path.value_at(r);
  for (; k < path.segment_count(); ++k) {
    const double seg_hi = path.node_time(k + 1);
    const double hi = std::min(t, seg_hi);
    const double w_hi = (hi == seg_hi) ? w[k + 1] : path.value_at(hi);
    if (hi > lo) {
      fn(hi - lo, w_lo, w_hi);
      lo = hi;
      w_lo = w_hi;
    }
    if (hi >= t)
      break;
  }
}

/// int_0^1 u^q e^{i y u} du for q = 0..4.
inline std::array<cplx, 5> unit_moments(double y) noexcept
{
  std::array<cplx, 5> m{};
  if (std::abs(y) < 1.0) {
    for (int q = 0; q < 5; ++q) {
      cplx term = 1.0;
      cplx acc = 0.0;
      for (int k = 0; k < 30; ++k) {
        acc += term / static_cast<double>(q + k + 1);
        term *= cplx(0.0, y) / static_cast<double>(k + 1);
      }
      m[static_cast<std::size_t>(q)] = acc;
    }
    return m;
  }
  const cplx e(std::cos(y), std::sin(y));
  const cplx iy(0.0, y);
  m[0] = expm1_ratio(y);
  for (int q = 1; q < 5; ++q)
    m[static_cast<std::size_t>(q)] = (e - static_cast<double>(q) * m[static_cast<std::size_t>(q - 1)]) / iy;
  return m;
}

/// int_0^1 e^{i y u} int_0^u e^{i x v} dv du.
inline cplx iterated_unit(double x, double y) noexcept
{
  if (std::abs(x) >= 1e-3)
    return (expm1_ratio(x + y) - expm1_ratio(y)) / cplx(0.0, x);
  const auto m = unit_moments(y);
  // expand e^{ixv}: sum_p (ix)^p u^{p+1} / (p+1)!
  cplx acc = 0.0;
  cplx ixp = 1.0;
  double fact = 1.0;
  for (int p = 0; p < 4; ++p) {
    fact *= static_cast<double>(p + 1);
    acc += ixp * m[static_cast<std::size_t>(p + 1)] / fact;
    ixp *= cplx(0.0, x);
  }
  return acc;
}

/// Iterated integral over one linear piece: int e^{i b w(t')} int^{t'} e^{i a w(s)} ds dt'.
inline cplx iterated_piece(double a, double b, double dt, double w0, double w1) noexcept
{
  const double dw = w1 - w0;
  const double ph = (a + b) * w0;
  return dt * dt * cplx(std::cos(ph), std::sin(ph)) * iterated_unit(a * dw, b * dw);
}

} // namespace detail

/// int_r^t e^{i b w(t')} Phi_{t',r}(a) dt', exact on the piecewise-linear interpolant.
inline cplx iterated_phase_integral(const ModulationPath& path, double r, double t, double a, double b)
{
  if (!(r >= 0.0) || !(t <= path.horizon()) || !(r <= t))
    throw std::out_of_range("iterated_phase_integral: need 0 <= r <= t <= T");
  cplx inner{};
  cplx acc{};
  detail::for_each_piece(path, r, t, [&](double dt, double w0, double w1) {
    acc += inner * detail::linear_piece(b, dt, w0, w1) + detail::iterated_piece(a, b, dt, w0, w1);
    inner += detail::linear_piece(a, dt, w0, w1);
  });
  return acc;
}

// ---------------------------------------------------------------------------
// Fractional Brownian motion

namespace detail {

inline double fgn_autocov(double hurst, std::size_t k)
{
  const double h2 = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  if (k == 0)
    return 1.0;
  return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(kk - 1.0, h2));
}

// FFTW planning is not thread-safe.
inline std::mutex& fftw_plan_mutex()
{
  static std::mutex m;
  return m;
}

/// Unit-step fractional Gaussian noise of length m by circulant embedding.
/// Returns false when the embedding has a materially negative eigenvalue.
inline bool fgn_circulant(double hurst, std::size_t m, Rng& rng, std::vector<double>& out)
{
  const std::size_t n = 2 * m;
  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lag = j <= m ? j : n - j;
    buf[j][0] = fgn_autocov(hurst, lag);
    buf[j][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> lambda(n);
  double lmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    lambda[j] = buf[j][0];
    lmax = std::max(lmax, std::abs(lambda[j]));
  }
  bool ok = true;
  for (double& l : lambda) {
    if (l < -1e-10 * lmax) {
      ok = false;
      break;
    }
    l = std::max(l, 0.0);
  }
  if (ok) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = std::sqrt(lambda[j] / static_cast<double>(n));
      buf[j][0] = s * rng.normal();
      buf[j][1] = s * rng.normal();
    }
    fftw_execute(plan);
    out.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      out[j] = buf[j][0];
  }
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return ok;
}

/// Exact fBm values at t_1..t_m (unit step) via Cholesky of the covariance.
inline std::vector<double> fbm_cholesky(double hurst, std::size_t m, Rng& rng)
{
  const double h2 = 2.0 * hurst;
  Eigen::MatrixXd cov(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double ti = static_cast<double>(i + 1);
      const double tj = static_cast<double>(j + 1);
      cov(i, j) = 0.5 * (std::pow(ti, h2) + std::pow(tj, h2) - std::pow(std::abs(ti - tj), h2));
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("generate_fbm: covariance factorization failed");
  Eigen::VectorXd z(m);
  for (std::size_t i = 0; i < m; ++i)
    z(i) = rng.normal();
  const Eigen::VectorXd x = llt.matrixL() * z;
  return {x.data(), x.data() + m};
}

inline constexpr std::size_t kCholeskyMaxIncrements = 64;

} // namespace detail

/// Fractional Brownian motion sample with Hurst index `hurst` on `sample_count`
/// uniform nodes of [0, horizon]; deterministic in `seed`.
inline ModulationPath generate_fbm(double hurst, double horizon, std::size_t sample_count,
                                   std::uint64_t seed)
{
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("generate_fbm: Hurst index must lie in (0, 1)");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("generate_fbm: horizon must be positive");
  if (sample_count < 2)
    throw std::invalid_argument("generate_fbm: need at least 2 samples");

  const std::size_t m = sample_count - 1;
  const double scale = std::pow(horizon / static_cast<double>(m), hurst);
  Rng rng(seed);
  std::vector<double> w(sample_count, 0.0);

  std::vector<double> incr;
  if (m > detail::kCholeskyMaxIncrements && detail::fgn_circulant(hurst, m, rng, incr)) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += incr[k];
      w[k + 1] = scale * acc;
    }
  } else {
    Rng chol_rng(seed);
    const auto x = detail::fbm_cholesky(hurst, m, chol_rng);
    for (std::size_t k = 0; k < m; ++k)
      w[k + 1] = scale * x[k];
  }
  return ModulationPath(std::move(w), horizon);
}

// ---------------------------------------------------------------------------
// Irregularity estimators

struct IrregularityGrid {
  double a_min = 1.0;                 // smallest nonzero |a| probed
  std::size_t points_per_decade = 64; // log spacing of |a|
  std::size_t time_grid_size = 129;   // uniform (r, t) nodes on [0, T]
};

struct IrregularityEstimate {
  double rho = 0.0;
  double gamma = 0.0;
  double norm_estimate = 0.0;
  double a_max = 0.0;
  std::size_t time_grid_size = 0;
  std::size_t a_grid_size = 0;
  double argmax_a = 0.0;
  double argmax_r = 0.0;
  double argmax_t = 0.0;
};

/// Sign-symmetric log-spaced frequency grid {0} U {+-a_j}, a_j = a_min 10^{j/ppd} <= a_max.
inline std::vector<double> frequency_grid(double a_max, const IrregularityGrid& grid)
{
  if (!(a_max > 0.0) || !(grid.a_min > 0.0) || grid.points_per_decade == 0)
    throw std::invalid_argument("frequency_grid: degenerate grid");
  std::vector<double> out{0.0};
  if (a_max < grid.a_min)
    return out;
  const double decades = std::log10(a_max / grid.a_min);
  const auto count = static_cast<std::size_t>(
      std::floor(decades * static_cast<double>(grid.points_per_decade) + 1e-9));
  for (std::size_t j = 0; j <= count; ++j) {
    const double a = grid.a_min *
                     std::pow(10.0, static_cast<double>(j) / static_cast<double>(grid.points_per_decade));
    out.push_back(a);
    out.push_back(-a);
  }
  return out;
}

inline std::vector<double> uniform_time_grid(double horizon, std::size_t size)
{
  if (size < 2)
    throw std::invalid_argument("uniform_time_grid: need at least 2 nodes");
  std::vector<double> t(size);
  for (std::size_t k = 0; k < size; ++k)
    t[k] = (static_cast<double>(k) * horizon) / static_cast<double>(size - 1);
  t.back() = horizon;
  return t;
}

namespace detail {

/// sup over r < t on the time grid of |Phi_{t,r}(a)| / (t - r)^gamma, with its location.
struct CellSup {
  double value = 0.0;
  double r = 0.0;
  double t = 0.0;
};

inline CellSup time_sup(const ModulationPath& path, double a, double gamma,
                        std::span<const double> times)
{
  const CumulativePhase cum(path, a);
  std::vector<cplx> f(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    f[i] = cum.at(times[i]);
  CellSup best;
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      const double len = times[j] - times[i];
      const double ratio = std::abs(f[j] - f[i]) / std::pow(len, gamma);
      if (ratio > best.value)
        best = {ratio, times[i], times[j]};
    }
  return best;
}

inline double japanese(double a) { return std::sqrt(1.0 + a * a); }

} // namespace detail

/// Grid supremum of <a>^rho |Phi_{t,r}(a)| / (t - r)^gamma.
inline IrregularityEstimate irregularity_norm(const ModulationPath& path, double rho, double gamma,
                                              double a_max, const IrregularityGrid& grid = {})
{
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("irregularity_norm: gamma must lie in (0, 1)");
  if (!(rho >= 0.0))
    throw std::invalid_argument("irregularity_norm: rho must be non-negative");
  if (!(a_max > 0.0))
    throw std::invalid_argument("irregularity_norm: a_max must be positive");
  if (grid.time_grid_size < 2)
    throw std::invalid_argument("irregularity_norm: time grid needs at least 2 nodes");
  const auto freqs = frequency_grid(a_max, grid);
  const auto times = uniform_time_grid(path.horizon(), grid.time_grid_size);

  IrregularityEstimate est;
  est.rho = rho;
  est.gamma = gamma;
  est.a_max = a_max;
  est.time_grid_size = times.size();
  est.a_grid_size = freqs.size();
  for (double a : freqs) {
    const auto cell = detail::time_sup(path, a, gamma, times);
    const double v = std::pow(detail::japanese(a), rho) * cell.value;
    if (v > est.norm_estimate) {
      est.norm_estimate = v;
      est.argmax_a = a;
      est.argmax_r = cell.r;
      est.argmax_t = cell.t;
    }
  }
  return est;
}

/// irregularity_norm at each of an increasing list of a_max levels, in one pass
/// (the estimate is a running maximum over the shared frequency grid).
inline std::vector<IrregularityEstimate> irregularity_sweep(const ModulationPath& path, double rho, double gamma,
                                                            std::span<const double> a_max_levels,
                                                            const IrregularityGrid& grid = {})
{
  if (a_max_levels.empty())
    return {};
  for (std::size_t i = 1; i < a_max_levels.size(); ++i)
    if (!(a_max_levels[i] > a_max_levels[i - 1]))
      throw std::invalid_argument("irregularity_sweep: a_max levels must be strictly increasing");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("irregularity_sweep: gamma must lie in (0, 1)");
  if (!(rho >= 0.0))
    throw std::invalid_argument("irregularity_sweep: rho must be non-negative");
  const auto freqs = frequency_grid(a_max_levels.back(), grid);
  const auto times = uniform_time_grid(path.horizon(), grid.time_grid_size);

  std::vector<IrregularityEstimate> out;
  IrregularityEstimate est;
  est.rho = rho;
  est.gamma = gamma;
  est.time_grid_size = times.size();
  std::size_t level = 0;
  std::size_t counted = 0;
  const auto flush_until = [&](double a_abs) {
    while (level < a_max_levels.size() && a_abs > a_max_levels[level]) {
      est.a_max = a_max_levels[level];
      est.a_grid_size = counted;
      out.push_back(est);
      ++level;
    }
  };
  for (double a : freqs) {
    flush_until(std::abs(a));
    ++counted;
    const auto cell = detail::time_sup(path, a, gamma, times);
    const double v = std::pow(detail::japanese(a), rho) * cell.value;
    if (v > est.norm_estimate) {
      est.norm_estimate = v;
      est.argmax_a = a;
      est.argmax_r = cell.r;
      est.argmax_t = cell.t;
    }
  }
  flush_until(std::numeric_limits<double>::infinity());
  return out;
}

/// pi over the median sample-to-sample increment of w: above this frequency the
/// linear interpolant, not the sampled path, dominates the phase integral.
inline double resolution_limit(const ModulationPath& path)
{
  const auto& w = path.values();
  std::vector<double> inc(w.size() - 1);
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    inc[i] = std::abs(w[i + 1] - w[i]);
  auto mid = inc.begin() + static_cast<std::ptrdiff_t>(inc.size() / 2);
  std::nth_element(inc.begin(), mid, inc.end());
  return *mid > 0.0 ? std::numbers::pi / *mid : std::numeric_limits<double>::infinity();
}

namespace detail {

/// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y)
{
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

} // namespace detail

/// Decay exponent of sup_{r,t} |Phi_{t,r}(a)| / (t - r)^gamma in <a>, fitted by
/// log-log regression over the positive log grid (each cell takes the larger of
/// the +a and -a suprema). Clamped at 0.
inline double estimate_rho(const ModulationPath& path, double gamma, double a_max,
                           const IrregularityGrid& grid = {})
{
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("estimate_rho: gamma must lie in (0, 1)");
  const auto freqs = frequency_grid(a_max, grid);
  const auto times = uniform_time_grid(path.horizon(), grid.time_grid_size);
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 1; i + 1 < freqs.size(); i += 2) {
    const double a = freqs[i];
    const double sup = std::max(detail::time_sup(path, a, gamma, times).value,
                                detail::time_sup(path, -a, gamma, times).value);
    if (sup <= 0.0)
      continue;
    lx.push_back(std::log(detail::japanese(a)));
    ly.push_back(std::log(sup));
  }
  if (lx.size() < 4)
    throw std::invalid_argument("estimate_rho: regression needs at least 4 frequency cells");
  return std::max(0.0, -detail::ls_slope(lx, ly));
}

// ---------------------------------------------------------------------------
// Text I/O: header "# modpath v1 T=<horizon>", then rows "<time> <value>".

inline void write_path(std::ostream& os, const ModulationPath& path)
{
  os.precision(17);
  os << "# modpath v1 T=" << path.horizon() << '\n';
  const auto w = path.values();
  for (std::size_t k = 0; k < w.size(); ++k)
    os << path.node_time(k) << ' ' << w[k] << '\n';
}

inline ModulationPath read_path(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line) || line.rfind("# modpath v1 T=", 0) != 0)
    throw std::runtime_error("read_path: missing '# modpath v1 T=' header");
  const double horizon = std::stod(line.substr(std::string("# modpath v1 T=").size()));
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream row(line);
    double t = 0.0;
    double v = 0.0;
    if (!(row >> t >> v))
      throw std::runtime_error("read_path: malformed row '" + line + "'");
    values.push_back(v);
  }
  return ModulationPath(std::move(values), horizon);
}

} // namespace modpde
