#pragma once

// Time integration in interaction variables:
//   - normal-form fixed point  u(t) = u0 + X_{t,0}(u0) + int_0^t N_{t,t'}(u(t')) dt'
//     (NLS: plus the resonant and quintic integrals), solved by Picard iteration;
//   - explicit Riemann / exponential-Euler march  u_{k+1} = u_k + X_{t_{k+1},t_k}(u_k);
//   - the corrected step that adds the frozen-state normal-form integral.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "modpde/modulation.hpp"
#include "modpde/operators.hpp"
#include "modpde/spectral.hpp"

namespace modpde {

// Product: smooth factor trapezoid-averaged per interval, path factors integrated
// exactly (quadratic family only; NLS falls back to Trapezoid).
enum class Quadrature { Left, Trapezoid, Product };
enum class Scheme { NormalForm, RiemannMild, EulerExponential, EulerCorrected };
enum class Representation { Interaction, Physical };

inline std::string to_string(Scheme s)
{
  switch (s) {
  case Scheme::NormalForm:
    return "normal_form";
  case Scheme::RiemannMild:
    return "riemann_mild";
  case Scheme::EulerExponential:
    return "euler_exponential";
  case Scheme::EulerCorrected:
    return "euler_corrected";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s)
{
  if (s == "normal_form")
    return Scheme::NormalForm;
  if (s == "riemann_mild")
    return Scheme::RiemannMild;
  if (s == "euler_exponential")
    return Scheme::EulerExponential;
  if (s == "euler_corrected")
    return Scheme::EulerCorrected;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

inline Quadrature parse_quadrature(const std::string& s)
{
  if (s == "left")
    return Quadrature::Left;
  if (s == "trapezoid")
    return Quadrature::Trapezoid;
  if (s == "product")
    return Quadrature::Product;
  throw std::invalid_argument("unknown quadrature '" + s + "'");
}

struct SolverConfig {
  std::size_t step_count = 32;
  double picard_tol = 1e-10;
  int picard_max_iter = 50;
  Quadrature quadrature = Quadrature::Product;
  Scheme scheme = Scheme::NormalForm;
  int substeps = 4; // corrected scheme only

  void validate() const
  {
    if (step_count < 1)
      throw std::invalid_argument("SolverConfig: step_count must be >= 1");
    if (!(picard_tol > 0.0))
      throw std::invalid_argument("SolverConfig: picard_tol must be positive");
    if (picard_max_iter < 1)
      throw std::invalid_argument("SolverConfig: picard_max_iter must be >= 1");
    if (substeps < 1)
      throw std::invalid_argument("SolverConfig: substeps must be >= 1");
  }
};

/// Raised when Picard iteration fails to reach the tolerance.
class PicardDivergence : public std::runtime_error {
public:
  PicardDivergence(double residual, int iterations)
      : std::runtime_error("Picard iteration did not converge: residual " + std::to_string(residual) +
                           " after " + std::to_string(iterations) + " iterations"),
        residual_(residual), iterations_(iterations)
  {
  }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  OperatorContext ctx;
  Representation representation = Representation::Interaction;
  int picard_iterations = 0;

  std::size_t size() const noexcept { return times.size(); }
  const SpectralField& final_state() const { return states.back(); }

  /// Index of the node at exactly time t.
  std::size_t node_index(double t) const
  {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (times[k] == t)
        return k;
    throw std::invalid_argument("Trajectory: time is not a grid node");
  }
};

/// Uniform node grid t_k = k tau / K with t_K = tau exactly.
inline std::vector<double> node_grid(double tau, std::size_t K)
{
  std::vector<double> t(K + 1);
  for (std::size_t k = 0; k <= K; ++k)
    t[k] = (static_cast<double>(k) * tau) / static_cast<double>(K);
  t[K] = tau;
  return t;
}

inline SpectralField to_physical(const SpectralField& f, const OperatorContext& ctx, double t)
{
  return propagator_apply(f, ctx.symbol, ctx.w(t), false);
}

inline SpectralField to_interaction(const SpectralField& f, const OperatorContext& ctx, double t)
{
  return propagator_apply(f, ctx.symbol, ctx.w(t), true);
}

/// Converts every node between interaction and physical variables.
inline Trajectory convert(const Trajectory& traj, Representation target)
{
  if (traj.representation == target)
    return traj;
  Trajectory out = traj;
  const bool forward = target == Representation::Physical;
  for (std::size_t k = 0; k < traj.size(); ++k)
    out.states[k] = propagator_apply(traj.states[k], traj.ctx.symbol, traj.ctx.w(traj.times[k]), !forward);
  out.representation = target;
  return out;
}

// ---------------------------------------------------------------------------
// Gauge transform for the cubic NLS: v = exp(-2 i mu t) u, mu = ||u||_{L^2}^2.

enum class GaugeDirection { Forward, Inverse };

inline SpectralField gauge_transform(const SpectralField& f, double mass, double t,
                                     GaugeDirection dir)
{
  if (!(mass >= 0.0))
    throw std::invalid_argument("gauge_transform: mass must be non-negative");
  const double sign = dir == GaugeDirection::Forward ? -1.0 : 1.0;
  SpectralField out = f;
  out *= unit_phase(sign * 2.0 * mass * t);
  return out;
}

inline Trajectory gauge_transform(const Trajectory& traj, double mass, GaugeDirection dir)
{
  Trajectory out = traj;
  for (std::size_t k = 0; k < traj.size(); ++k)
    out.states[k] = gauge_transform(traj.states[k], mass, traj.times[k], dir);
  return out;
}

inline double mass(const SpectralField& f) { return std::norm(l2_norm(f)); }

namespace detail {

inline void validate_initial(const OperatorContext& ctx, const SpectralField& u0, double tau)
{
  require_band(ctx, u0);
  if (!(tau > 0.0) || tau > ctx.horizon())
    throw std::invalid_argument("solver: need 0 < tau <= path horizon");
  if (requires_mean_zero(ctx.equation) && u0[0] != cplx{})
    throw std::invalid_argument("solver: initial data must be mean-zero for this equation");
}

/// Registry of distinct phase frequencies with Phi_{t_k,0}(a) tabulated on the node grid.
class PhaseTable {
public:
  int slot(double a)
  {
    auto [it, inserted] = index_.try_emplace(a, static_cast<int>(freqs_.size()));
    if (inserted)
      freqs_.push_back(a);
    return it->second;
  }

  /// Tabulates F_k(a) = Phi_{t_k,0}(a) for every registered a.
  void build(const ModulationPath& path, const std::vector<double>& times)
  {
    nodes_ = times.size();
    table_.assign(freqs_.size() * nodes_, cplx{});
    const auto w = path.values();
    const double t_end = times.back();
    const std::size_t last_seg = path.segment_of(t_end);
    for (std::size_t s = 0; s < freqs_.size(); ++s) {
      const double a = freqs_[s];
      cplx* row = &table_[s * nodes_];
      // Walk segments and node times together, accumulating left to right.
      cplx acc{};
      double lo = 0.0;
      double w_lo = 0.0;
      row[0] = cplx{};
      std::size_t node = 1;
      for (std::size_t seg = 0; seg <= last_seg && node < nodes_; ++seg) {
        const double seg_hi = path.node_time(seg + 1);
        while (node < nodes_ && times[node] <= seg_hi) {
          const double hi = times[node];
          const double w_hi = path.value_at(hi);
          if (hi > lo)
            acc += a == 0.0 ? cplx(hi - lo, 0.0) : linear_piece(a, hi - lo, w_lo, w_hi);
          lo = hi;
          w_lo = w_hi;
          row[node++] = acc;
        }
        if (node < nodes_ && seg_hi > lo) {
          acc += a == 0.0 ? cplx(seg_hi - lo, 0.0) : linear_piece(a, seg_hi - lo, w_lo, w[seg + 1]);
          lo = seg_hi;
          w_lo = w[seg + 1];
        }
      }
    }
  }

  int find(double a) const
  {
    const auto it = index_.find(a);
    if (it == index_.end())
      throw std::logic_error("PhaseTable: frequency was not registered before build");
    return it->second;
  }

  cplx at(int slot, std::size_t node) const noexcept
  {
    return table_[static_cast<std::size_t>(slot) * nodes_ + node];
  }

  std::size_t size() const noexcept { return freqs_.size(); }

private:
  std::unordered_map<double, int> index_;
  std::vector<double> freqs_;
  std::vector<cplx> table_;
  std::size_t nodes_ = 0;
};

/// Phase source Phi_{t_k, t_j}(a) = F_k(a) - F_j(a) backed by a PhaseTable.
struct TablePhase {
  const PhaseTable* table;
  std::size_t k;
  std::size_t j;
  cplx operator()(double a) const
  {
    const int s = table->find(a);
    return table->at(s, k) - table->at(s, j);
  }
};

/// One summand family of the normal-form integral, held in "prefix" form:
/// int_0^{t_k} Phi_{t_k,t'}(a) G(t') dt' ~ F_k(a) S1_k - S2_k, with
/// S1_k = sum_{j<k} q_j G_j and S2_k = sum_{j<k} q_j F_j(a) G_j.
/// (The j = k term carries Phi_{t_k,t_k} = 0.)
struct PrefixTerms {
  std::vector<int> out_index; // n + N
  std::vector<int> slot;
  std::vector<cplx> s1;
  std::vector<cplx> s2;

  void reset()
  {
    s1.assign(out_index.size(), cplx{});
    s2.assign(out_index.size(), cplx{});
  }

  void emit(const PhaseTable& table, std::size_t k, std::vector<cplx>& out) const
  {
    for (std::size_t i = 0; i < out_index.size(); ++i)
      out[static_cast<std::size_t>(out_index[i])] += table.at(slot[i], k) * s1[i] - s2[i];
  }

  void absorb(const PhaseTable& table, std::size_t k, double q, const std::vector<cplx>& g)
  {
    for (std::size_t i = 0; i < out_index.size(); ++i) {
      const cplx qg = q * g[i];
      s1[i] += qg;
      s2[i] += table.at(slot[i], k) * qg;
    }
  }
};

/// Normal-form right-hand side for the quadratic family.
class QuadraticNormalForm {
public:
  QuadraticNormalForm(const OperatorContext& ctx, PhaseTable& table) : ctx_(&ctx)
  {
    const int N = ctx.max_mode;
    for (int n = -N; n <= N; ++n) {
      if (n == 0)
        continue;
      for (int n3 = -N; n3 <= N; ++n3) {
        const int m = n - n3;
        if (n3 == 0 || m == 0)
          continue;
        terms_.out_index.push_back(n + N);
        terms_.slot.push_back(table.slot(resonance_quadratic(ctx.symbol, n, m, n3)));
        m_.push_back(m);
        n3_.push_back(n3);
        coef_.push_back(2.0 * quadratic_multiplier(ctx.equation, n) * quadratic_multiplier(ctx.equation, m));
      }
      for (int n1 = -N; n1 <= N; ++n1) {
        const int n2 = n - n1;
        if (n1 == 0 || n2 == 0 || n2 < -N || n2 > N)
          continue;
        table.slot(resonance_quadratic(ctx.symbol, n, n1, n2));
      }
    }
    g_.resize(m_.size());
  }

  PrefixTerms& terms() { return terms_; }

  const std::vector<cplx>& integrand(const SpectralField& u, double w_t)
  {
    const int N = ctx_->max_mode;
    const auto B = quadratic_interaction(*ctx_, w_t, u, u);
    for (std::size_t i = 0; i < m_.size(); ++i)
      g_[i] = coef_[i] * B[static_cast<std::size_t>(m_[i] + 2 * N)] * u[n3_[i]];
    return g_;
  }

private:
  const OperatorContext* ctx_;
  PrefixTerms terms_;
  std::vector<int> m_;
  std::vector<int> n3_;
  std::vector<cplx> coef_;
  std::vector<cplx> g_;
};

/// Normal-form right-hand side for the renormalized cubic NLS (quintic terms).
class CubicNormalForm {
public:
  CubicNormalForm(const OperatorContext& ctx, PhaseTable& table) : ctx_(&ctx)
  {
    const int N = ctx.max_mode;
    for (int n = -N; n <= N; ++n) {
      // NN type I: (n, m, n4), n5 = n - m + n4
      for (int m = -3 * N; m <= 3 * N; ++m) {
        if (m == n)
          continue;
        for (int n4 = -N; n4 <= N; ++n4) {
          const int n5 = n - m + n4;
          if (n5 < -N || n5 > N || n5 == n)
            continue;
          push(table, n, resonance_cubic_nls(n, m, n4, n5), Kind::NNFirst, m, n4, n5);
        }
      }
      // NN type II: (n, n1, m), n5 = n - n1 + m
      for (int n1 = -N; n1 <= N; ++n1) {
        if (n1 == n)
          continue;
        for (int m = -3 * N; m <= 3 * N; ++m) {
          const int n5 = n - n1 + m;
          if (n5 < -N || n5 > N || n5 == n)
            continue;
          push(table, n, resonance_cubic_nls(n, n1, m, n5), Kind::NNSecond, n1, m, n5);
        }
      }
      // NR and the boundary driver share the index set (n, n1, n2), n3 = n - n1 + n2.
      for (int n1 = -N; n1 <= N; ++n1) {
        if (n1 == n)
          continue;
        for (int n2 = -N; n2 <= N; ++n2) {
          const int n3 = n - n1 + n2;
          if (n3 < -N || n3 > N || n3 == n)
            continue;
          push(table, n, resonance_cubic_nls(n, n1, n2, n3), Kind::NR, n1, n2, n3);
        }
      }
    }
    g_.resize(kind_.size());
  }

  PrefixTerms& terms() { return terms_; }

  const std::vector<cplx>& integrand(const SpectralField& v, double w_t)
  {
    const int N = ctx_->max_mode;
    const auto C = cubic_interaction(N, w_t, +1.0, v, v, v);
    const auto& D = C; // conj taken below: the inner (f2, f3, f4) interaction of (v, v, v)
    SpectralField rho(N);
    for (int n = -N; n <= N; ++n)
      rho[n] = std::norm(v[n]) * v[n];
    for (std::size_t i = 0; i < kind_.size(); ++i) {
      const int a = i1_[i];
      const int b = i2_[i];
      const int c = i3_[i];
      switch (kind_[i]) {
      case Kind::NNFirst:
        g_[i] = -2.0 * C[static_cast<std::size_t>(a + 3 * N)] * std::conj(v[b]) * v[c];
        break;
      case Kind::NNSecond:
        g_[i] = v[a] * std::conj(D[static_cast<std::size_t>(b + 3 * N)]) * v[c];
        break;
      case Kind::NR:
        g_[i] = 2.0 * rho[a] * std::conj(v[b]) * v[c] - v[a] * std::conj(rho[b]) * v[c];
        break;
      }
    }
    return g_;
  }

private:
  enum class Kind : unsigned char { NNFirst, NNSecond, NR };

  void push(PhaseTable& table, int n, long long xi, Kind kind, int a, int b, int c)
  {
    terms_.out_index.push_back(n + ctx_->max_mode);
    terms_.slot.push_back(table.slot(static_cast<double>(xi)));
    kind_.push_back(kind);
    i1_.push_back(a);
    i2_.push_back(b);
    i3_.push_back(c);
  }

  const OperatorContext* ctx_;
  PrefixTerms terms_;
  std::vector<Kind> kind_;
  std::vector<int> i1_;
  std::vector<int> i2_;
  std::vector<int> i3_;
  std::vector<cplx> g_;
};

/// Product-integration form of the quadratic-family normal-form integral. Each
/// summand of N_{t_k,t'}(u(t')) is Phi_{t_k,t'}(a) e^{i b w(t')} P(t') with P a
/// smooth trilinear product of interaction coefficients; P is taken constant on
/// each node interval (endpoint average, or left value) while the path factors
/// are integrated exactly:
///   int_{t_j}^{t_{j+1}} Phi_{t_k,t'}(a) e^{i b w(t')} dt' = F_k(a) E_j(b) - C_j(a,b),
///   E_j(b) = int_{t_j}^{t_{j+1}} e^{i b w},  C_j = F_j(a) E_j(b) + D_j(a,b),
/// with D_j the iterated integral over the interval.
class QuadraticProductRule {
public:
  QuadraticProductRule(const OperatorContext& ctx, PhaseTable& table) : ctx_(&ctx)
  {
    const int N = ctx.max_mode;
    std::unordered_map<std::uint64_t, int> pair_index;
    std::unordered_map<double, int> b_index;
    for (int n = -N; n <= N; ++n) {
      if (n == 0)
        continue;
      for (int n3 = -N; n3 <= N; ++n3) {
        const int m = n - n3;
        if (n3 == 0 || m == 0)
          continue;
        const double a = resonance_quadratic(ctx.symbol, n, m, n3);
        const int a_slot = table.slot(a);
        const cplx coef = 2.0 * quadratic_multiplier(ctx.equation, n) * quadratic_multiplier(ctx.equation, m);
        for (int n1 = -N; n1 <= N; ++n1) {
          const int n2 = m - n1;
          if (n1 == 0 || n2 == 0 || n2 < -N || n2 > N)
            continue;
          const double b = resonance_quadratic(ctx.symbol, m, n1, n2);
          auto [bit, b_new] = b_index.try_emplace(b, static_cast<int>(b_index.size()));
          const std::uint64_t key = (static_cast<std::uint64_t>(a_slot) << 32) |
                                    static_cast<std::uint32_t>(bit->second);
          auto [pit, p_new] = pair_index.try_emplace(key, static_cast<int>(pair_a_.size()));
          if (p_new) {
            pair_a_.push_back(a);
            pair_b_.push_back(b);
            pair_slot_.push_back(a_slot);
          }
          out_.push_back(n + N);
          n1_.push_back(n1);
          n2_.push_back(n2);
          n3_.push_back(n3);
          coef_.push_back(coef);
          pair_.push_back(pit->second);
        }
      }
      // Boundary term frequencies.
      for (int n1 = -N; n1 <= N; ++n1) {
        const int n2 = n - n1;
        if (n1 == 0 || n2 == 0 || n2 < -N || n2 > N)
          continue;
        table.slot(resonance_quadratic(ctx.symbol, n, n1, n2));
      }
    }
  }

  std::size_t pair_count() const noexcept { return pair_a_.size(); }
  std::size_t term_count() const noexcept { return out_.size(); }

  /// Splits the node intervals into linear path pieces and, if it fits the
  /// memory budget, caches the per-interval weights. Call after table.build.
  void prepare(const PhaseTable& table, const std::vector<double>& times)
  {
    table_ = &table;
    times_ = times;
    const std::size_t K = times.size() - 1;
    pieces_.clear();
    first_.assign(K + 1, 0);
    for (std::size_t j = 0; j < K; ++j) {
      first_[j] = pieces_.size();
      for_each_piece(*ctx_->path, times[j], times[j + 1],
                     [&](double dt, double w0, double w1) { pieces_.push_back({dt, w0, w1}); });
    }
    first_[K] = pieces_.size();
    cached_ = pair_count() * K <= kCacheBudget;
    if (cached_) {
      e_cache_.resize(pair_count() * K);
      c_cache_.resize(pair_count() * K);
      for (std::size_t j = 0; j < K; ++j)
        interval_weights(j, &e_cache_[j * pair_count()], &c_cache_[j * pair_count()]);
    }
  }

  /// out[k][n + N] += int_0^{t_k} N_{t_k,t'}(u(t')) dt' for the iterate `states`.
  void integrate(const std::vector<SpectralField>& states, bool trapezoid,
                 std::vector<std::vector<cplx>>& out)
  {
    const std::size_t K = times_.size() - 1;
    const std::size_t T = term_count();
    const std::size_t P = pair_count();
    s1_.assign(T, cplx{});
    s2_.assign(T, cplx{});
    prod_lo_.resize(T);
    prod_hi_.resize(T);
    fill_products(states[0], prod_lo_);
    std::vector<cplx> e_tmp;
    std::vector<cplx> c_tmp;
    if (!cached_) {
      e_tmp.resize(P);
      c_tmp.resize(P);
    }
    for (std::size_t k = 0; k <= K; ++k) {
      auto& o = out[k];
      if (k > 0) {
        for (std::size_t i = 0; i < T; ++i)
          o[static_cast<std::size_t>(out_[i])] +=
              table_->at(pair_slot_[static_cast<std::size_t>(pair_[i])], k) * s1_[i] - s2_[i];
      }
      if (k == K)
        break;
      const cplx* e = nullptr;
      const cplx* c = nullptr;
      if (cached_) {
        e = &e_cache_[k * P];
        c = &c_cache_[k * P];
      } else {
        interval_weights(k, e_tmp.data(), c_tmp.data());
        e = e_tmp.data();
        c = c_tmp.data();
      }
      fill_products(states[k + 1], prod_hi_);
      for (std::size_t i = 0; i < T; ++i) {
        const cplx p = trapezoid ? 0.5 * (prod_lo_[i] + prod_hi_[i]) : prod_lo_[i];
        const auto q = static_cast<std::size_t>(pair_[i]);
        s1_[i] += e[q] * p;
        s2_[i] += c[q] * p;
      }
      std::swap(prod_lo_, prod_hi_);
    }
  }

private:
  struct Piece {
    double dt;
    double w0;
    double w1;
  };

  static constexpr std::size_t kCacheBudget = std::size_t{1} << 22;

  void fill_products(const SpectralField& u, std::vector<cplx>& prod) const
  {
    for (std::size_t i = 0; i < out_.size(); ++i)
      prod[i] = coef_[i] * u[n1_[i]] * u[n2_[i]] * u[n3_[i]];
  }

  void interval_weights(std::size_t j, cplx* e, cplx* c) const
  {
    const std::size_t lo = first_[j];
    const std::size_t hi = first_[j + 1];
    for (std::size_t q = 0; q < pair_a_.size(); ++q) {
      const double a = pair_a_[q];
      const double b = pair_b_[q];
      cplx inner{};
      cplx ej{};
      cplx dj{};
      for (std::size_t p = lo; p < hi; ++p) {
        const Piece& pc = pieces_[p];
        const cplx ib = linear_piece(b, pc.dt, pc.w0, pc.w1);
        dj += inner * ib + iterated_piece(a, b, pc.dt, pc.w0, pc.w1);
        inner += linear_piece(a, pc.dt, pc.w0, pc.w1);
        ej += ib;
      }
      e[q] = ej;
      c[q] = table_->at(pair_slot_[q], j) * ej + dj;
    }
  }

  const OperatorContext* ctx_;
  const PhaseTable* table_ = nullptr;
  std::vector<double> times_;
  std::vector<int> out_;
  std::vector<int> n1_;
  std::vector<int> n2_;
  std::vector<int> n3_;
  std::vector<cplx> coef_;
  std::vector<int> pair_;
  std::vector<double> pair_a_;
  std::vector<double> pair_b_;
  std::vector<int> pair_slot_;
  std::vector<Piece> pieces_;
  std::vector<std::size_t> first_;
  bool cached_ = false;
  std::vector<cplx> e_cache_;
  std::vector<cplx> c_cache_;
  std::vector<cplx> s1_;
  std::vector<cplx> s2_;
  std::vector<cplx> prod_lo_;
  std::vector<cplx> prod_hi_;
};

inline SpectralField with_flags_of(SpectralField f, const SpectralField& like)
{
  f.set_flags(like.mean_zero(), like.real_valued());
  return f;
}

} // namespace detail

/// Normal-form fixed point on the node grid, solved by Picard iteration from the
/// constant iterate u0. Returns the interaction-representation trajectory.
inline Trajectory solve_normal_form(const OperatorContext& ctx, const SpectralField& u0, double tau,
                                    const SolverConfig& cfg)
{
  cfg.validate();
  detail::validate_initial(ctx, u0, tau);
  const std::size_t K = cfg.step_count;
  const auto times = node_grid(tau, K);
  const double h = tau / static_cast<double>(K);
  const int N = ctx.max_mode;
  const bool nls = ctx.equation == EquationKind::NLS;

  // NLS has no product rule; it uses the trapezoid rule instead.
  const bool trapezoid = cfg.quadrature != Quadrature::Left;
  const bool product = !nls && cfg.quadrature == Quadrature::Product;

  detail::PhaseTable table;
  std::unique_ptr<detail::QuadraticNormalForm> quad;
  std::unique_ptr<detail::QuadraticProductRule> quad_product;
  std::unique_ptr<detail::CubicNormalForm> cubic;
  detail::PrefixTerms* terms = nullptr;
  if (nls) {
    cubic = std::make_unique<detail::CubicNormalForm>(ctx, table);
    terms = &cubic->terms();
  } else if (product) {
    quad_product = std::make_unique<detail::QuadraticProductRule>(ctx, table);
  } else {
    quad = std::make_unique<detail::QuadraticNormalForm>(ctx, table);
    terms = &quad->terms();
  }
  table.build(*ctx.path, times);
  if (product)
    quad_product->prepare(table, times);

  std::vector<double> w_nodes(K + 1);
  for (std::size_t k = 0; k <= K; ++k)
    w_nodes[k] = ctx.w(times[k]);

  // Boundary term X_{t_k,0}(u0).
  std::vector<SpectralField> boundary(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    detail::TablePhase phase{&table, k, 0};
    boundary[k] = nls ? trilinear_nonresonant_nls_with(ctx, phase, u0, u0, u0)
                      : bilinear_driver_with(ctx, phase, u0, u0);
  }

  const auto left_weight = [&](std::size_t j) {
    return (trapezoid && j == 0) ? 0.5 * h : h;
  };

  Trajectory traj{times, std::vector<SpectralField>(K + 1, u0), ctx, Representation::Interaction, 0};
  std::vector<cplx> out(static_cast<std::size_t>(2 * N + 1));
  std::vector<std::vector<cplx>> product_out;
  double residual = 0.0;
  for (int iter = 1; iter <= cfg.picard_max_iter; ++iter) {
    if (product) {
      product_out.assign(K + 1, std::vector<cplx>(static_cast<std::size_t>(2 * N + 1)));
      quad_product->integrate(traj.states, trapezoid, product_out);
    } else {
      terms->reset();
    }
    SpectralField resonant_acc(N);
    std::vector<SpectralField> next(K + 1);
    residual = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
      const SpectralField& uk = traj.states[k];
      if (product) {
        out = product_out[k];
      } else {
        std::fill(out.begin(), out.end(), cplx{});
        terms->emit(table, k, out);
      }
      SpectralField nk = u0;
      nk += boundary[k];
      for (int n = -N; n <= N; ++n)
        nk[n] += out[static_cast<std::size_t>(n + N)];
      SpectralField res_k;
      if (nls) {
        res_k = resonant_cubic(uk, uk, uk);
        nk += resonant_acc;
        if (trapezoid && k > 0)
          nk += cplx(0.5 * h) * res_k;
      }
      if (requires_mean_zero(ctx.equation))
        nk[0] = 0.0;
      nk = detail::with_flags_of(std::move(nk), u0);
      residual = std::max(residual, l2_distance(nk, uk));
      next[k] = std::move(nk);

      if (k < K && !product) {
        const double q = left_weight(k);
        const auto& g = nls ? cubic->integrand(uk, w_nodes[k]) : quad->integrand(uk, w_nodes[k]);
        terms->absorb(table, k, q, g);
        if (nls)
          resonant_acc += cplx(q) * res_k;
      }
    }
    traj.states = std::move(next);
    traj.picard_iterations = iter;
    if (!std::isfinite(residual))
      throw PicardDivergence(residual, iter);
    if (residual < cfg.picard_tol)
      return traj;
  }
  throw PicardDivergence(residual, cfg.picard_max_iter);
}

/// Normal-form solve with geometric tau-halving (up to `max_halvings` times) on
/// Picard failure. Returns the trajectory on the accepted tau.
inline Trajectory solve_normal_form_adaptive(const OperatorContext& ctx, const SpectralField& u0,
                                             double tau, const SolverConfig& cfg,
                                             int max_halvings = 8)
{
  for (int attempt = 0;; ++attempt) {
    try {
      return solve_normal_form(ctx, u0, tau, cfg);
    } catch (const PicardDivergence&) {
      if (attempt >= max_halvings)
        throw;
      tau *= 0.5;
    }
  }
}

/// One explicit Riemann step u + X_{t1,t0}(u); for NLS plus (t1 - t0) R(u).
inline SpectralField riemann_step(const OperatorContext& ctx, double t0, double t1,
                                  const SpectralField& u)
{
  SpectralField next = u;
  if (ctx.equation == EquationKind::NLS) {
    next += trilinear_nonresonant_nls(ctx, t0, t1, u, u, u);
    next += cplx(t1 - t0) * resonant_cubic(u, u, u);
  } else {
    next += bilinear_driver(ctx, t0, t1, u, u);
    next[0] = 0.0;
  }
  return detail::with_flags_of(std::move(next), u);
}

/// Riemann step plus the normal-form integral with the state frozen at u_k:
///   u_k + X_{t1,t0}(u_k) + Quad_{t' in [t0,t1]}[N_{t1,t'}(u_k)]   (trapezoid on substep nodes)
inline SpectralField corrected_step(const OperatorContext& ctx, double t0, double t1,
                                    const SpectralField& uk, int substeps,
                                    bool include_trilinear = true)
{
  if (!(t0 < t1))
    throw std::invalid_argument("corrected_step: need t0 < t1");
  if (substeps < 1)
    throw std::invalid_argument("corrected_step: substeps must be >= 1");
  SpectralField next = riemann_step(ctx, t0, t1, uk);
  if (!include_trilinear)
    return next;
  const double hs = (t1 - t0) / substeps;
  for (int i = 0; i < substeps; ++i) { // the i = substeps node has Phi_{t1,t1} = 0
    const double s = i == 0 ? t0 : t0 + i * hs;
    const double q = i == 0 ? 0.5 * hs : hs;
    if (ctx.equation == EquationKind::NLS) {
      next += cplx(q) * quintic_NN(ctx, s, t1, uk, uk, uk, uk, uk);
      next += cplx(q) * quintic_NR(ctx, s, t1, uk, uk, uk, uk, uk);
    } else {
      next += cplx(q) * trilinear_normal_form(ctx, s, t1, uk, uk, uk);
    }
  }
  if (requires_mean_zero(ctx.equation))
    next[0] = 0.0;
  return detail::with_flags_of(std::move(next), uk);
}

/// Explicit march u_{k+1} = u_k + X_{t_{k+1},t_k}(u_k) (NLS: plus the resonant term).
inline Trajectory solve_mild_riemann(const OperatorContext& ctx, const SpectralField& u0,
                                     double tau, const SolverConfig& cfg)
{
  cfg.validate();
  detail::validate_initial(ctx, u0, tau);
  const auto times = node_grid(tau, cfg.step_count);
  Trajectory traj{times, {u0}, ctx, Representation::Interaction, 0};
  traj.states.reserve(times.size());
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    traj.states.push_back(riemann_step(ctx, times[k], times[k + 1], traj.states.back()));
  return traj;
}

inline Trajectory solve_corrected(const OperatorContext& ctx, const SpectralField& u0, double tau,
                                  const SolverConfig& cfg)
{
  cfg.validate();
  detail::validate_initial(ctx, u0, tau);
  const auto times = node_grid(tau, cfg.step_count);
  Trajectory traj{times, {u0}, ctx, Representation::Interaction, 0};
  traj.states.reserve(times.size());
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    traj.states.push_back(corrected_step(ctx, times[k], times[k + 1], traj.states.back(), cfg.substeps));
  return traj;
}

/// Dispatches on cfg.scheme.
inline Trajectory solve(const OperatorContext& ctx, const SpectralField& u0, double tau,
                        const SolverConfig& cfg)
{
  switch (cfg.scheme) {
  case Scheme::NormalForm:
    return solve_normal_form(ctx, u0, tau, cfg);
  case Scheme::RiemannMild:
  case Scheme::EulerExponential:
    return solve_mild_riemann(ctx, u0, tau, cfg);
  case Scheme::EulerCorrected:
    return solve_corrected(ctx, u0, tau, cfg);
  }
  throw std::invalid_argument("solve: unknown scheme");
}

// ---------------------------------------------------------------------------
// Increment identity check

/// N_{t,r}(u) for the trajectory's equation: the trilinear normal-form operator,
/// or for NLS the sum R(u) + NN_{t,r}(u) + NR_{t,r}(u).
inline SpectralField normal_form_integrand(const OperatorContext& ctx, double r, double t,
                                           const SpectralField& u)
{
  if (ctx.equation == EquationKind::NLS) {
    SpectralField out = resonant_cubic(u, u, u);
    if (r < t) {
      out += quintic_NN(ctx, r, t, u, u, u, u, u);
      out += quintic_NR(ctx, r, t, u, u, u, u, u);
    }
    return out;
  }
  return trilinear_normal_form(ctx, r, t, u, u, u);
}

struct IncrementCheck {
  double residual = 0.0;
  double quadrature_estimate = 0.0;
};

namespace detail {

inline void require_interaction(const Trajectory& traj)
{
  if (traj.representation != Representation::Interaction)
    throw std::invalid_argument("verify_increment_identity: needs interaction representation");
}

/// g[l] = N_{t_hi, t_l}(u(t_l)) for l = 0..hi.
inline std::vector<SpectralField> integrand_row(const Trajectory& traj, std::size_t hi)
{
  std::vector<SpectralField> g;
  g.reserve(hi + 1);
  for (std::size_t l = 0; l <= hi; ++l)
    g.push_back(normal_form_integrand(traj.ctx, traj.times[l], traj.times[hi], traj.states[l]));
  return g;
}

/// Trapezoid and left-rule sums of g over nodes lo..hi.
inline std::pair<SpectralField, SpectralField> node_integrals(const Trajectory& traj,
                                                              const std::vector<SpectralField>& g,
                                                              std::size_t lo, std::size_t hi)
{
  const int N = traj.ctx.max_mode;
  SpectralField trap(N);
  SpectralField left(N);
  for (std::size_t l = lo; l < hi; ++l) {
    const double hl = traj.times[l + 1] - traj.times[l];
    left += cplx(hl) * g[l];
    trap += cplx(0.5 * hl) * g[l];
    trap += cplx(0.5 * hl) * g[l + 1];
  }
  return {trap, left};
}

inline double quadrature_gap(const Trajectory& traj, const std::vector<SpectralField>& g, std::size_t hi)
{
  const auto [trap, left] = node_integrals(traj, g, 0, hi);
  return l2_distance(trap, left);
}

inline IncrementCheck increment_check(const Trajectory& traj, std::size_t i, std::size_t j,
                                      const std::vector<SpectralField>& row_j, double gap_i, double gap_j)
{
  const auto& ctx = traj.ctx;
  const double r = traj.times[i];
  const double t = traj.times[j];
  const SpectralField& ur = traj.states[i];
  SpectralField drive = ctx.equation == EquationKind::NLS
                            ? trilinear_nonresonant_nls(ctx, r, t, ur, ur, ur)
                            : bilinear_driver(ctx, r, t, ur, ur);
  const auto [trap, left] = node_integrals(traj, row_j, i, j);
  SpectralField res = traj.states[j] - ur;
  res -= drive;
  res -= trap;
  return {l2_norm(res), l2_distance(trap, left) + gap_j + gap_i};
}

} // namespace detail

/// Residual of u(t) - u(r) = X_{t,r}(u(r)) + int_r^t N_{t,t'}(u(t')) dt' on the node
/// grid (trapezoid), evaluated with the direct operators. The quadrature estimate is
/// the trapezoid/left-rule gap of the three integrals that enter the residual
/// (over [r,t], [0,t] and [0,r]).
inline IncrementCheck verify_increment_identity_detailed(const Trajectory& traj, double r, double t)
{
  detail::require_interaction(traj);
  const std::size_t i = traj.node_index(r);
  const std::size_t j = traj.node_index(t);
  if (i > j)
    throw std::invalid_argument("verify_increment_identity: need r <= t");
  if (i == j)
    return {};
  const auto row_j = detail::integrand_row(traj, j);
  const double gap_i = i > 0 ? detail::quadrature_gap(traj, detail::integrand_row(traj, i), i) : 0.0;
  return detail::increment_check(traj, i, j, row_j, gap_i, detail::quadrature_gap(traj, row_j, j));
}

struct NodePairCheck {
  std::size_t i = 0;
  std::size_t j = 0;
  IncrementCheck check;
};

/// The detailed check on every node pair i < j. Integrands depend only on the
/// upper node, so each is evaluated once.
inline std::vector<NodePairCheck> verify_increment_identity_all(const Trajectory& traj)
{
  detail::require_interaction(traj);
  const std::size_t n = traj.size();
  std::vector<std::vector<SpectralField>> rows(n);
  std::vector<double> gap(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    rows[j] = detail::integrand_row(traj, j);
    gap[j] = detail::quadrature_gap(traj, rows[j], j);
  }
  std::vector<NodePairCheck> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.push_back({i, j, detail::increment_check(traj, i, j, rows[j], gap[i], gap[j])});
  return out;
}

inline double verify_increment_identity(const Trajectory& traj, double r, double t)
{
  return verify_increment_identity_detailed(traj, r, t).residual;
}

} // namespace modpde
