#pragma once

// Verification harness: hypothesis checks for the well-posedness regimes,
// conservation audits, smoothing exponents, operator scaling probes and
// mesh-convergence studies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modpde/format.hpp"
#include "modpde/modulation.hpp"
#include "modpde/operators.hpp"
#include "modpde/parallel.hpp"
#include "modpde/rng.hpp"
#include "modpde/solvers.hpp"
#include "modpde/spectral.hpp"

namespace modpde {

// ---------------------------------------------------------------------------
// Regime check

struct RegimeClaim {
  std::string tag;       // short identifier, e.g. "kdv.lwp.moderate"
  std::string condition; // the inequality set, in words
  bool satisfied = false;
};

struct RegimeVerdict {
  EquationKind equation = EquationKind::KdV;
  double rho = 0.0;
  double gamma = 0.0;
  double s = 0.0;
  std::optional<double> s0;
  std::vector<RegimeClaim> claims;

  const RegimeClaim* find(const std::string& tag) const
  {
    for (const auto& c : claims)
      if (c.tag == tag)
        return &c;
    return nullptr;
  }
};

/// Evaluates the hypotheses of the well-posedness results literally (no slack).
/// Smoothing claims are only listed when s0 is given.
inline RegimeVerdict regime_check(EquationKind eq, double rho, double gamma, double s,
                                  std::optional<double> s0 = std::nullopt)
{
  if (!(gamma > 0.5 && gamma < 1.0))
    throw std::invalid_argument("regime_check: gamma must lie in (1/2, 1)");
  if (!std::isfinite(rho) || !std::isfinite(s) || (s0 && !std::isfinite(*s0)))
    throw std::invalid_argument("regime_check: non-finite input");
  RegimeVerdict v{eq, rho, gamma, s, s0, {}};
  auto add = [&](std::string tag, std::string cond, bool ok) {
    v.claims.push_back({std::move(tag), std::move(cond), ok});
  };
  switch (eq) {
  case EquationKind::KdV:
    add("kdv.lwp.moderate", "1/2 <= rho <= 3/4 and s > 3/2 - 3 rho",
        rho >= 0.5 && rho <= 0.75 && s > 1.5 - 3.0 * rho);
    add("kdv.lwp.strong", "rho > 3/4 and s >= -rho", rho > 0.75 && s >= -rho);
    add("kdv.unconditional", "rho > 5/4 and s >= 0", rho > 1.25 && s >= 0.0);
    if (s0)
      add("kdv.smoothing", "rho > 5/4, s0 > s >= 0 and s0 < s + 2 rho - 5/2",
          rho > 1.25 && *s0 > s && s >= 0.0 && *s0 < s + 2.0 * rho - 2.5);
    break;
  case EquationKind::BO:
  case EquationKind::ILW: {
    const std::string p = eq == EquationKind::BO ? "bo" : "ilw";
    add(p + ".lwp.critical", "rho = 1 and s > -1/2", rho == 1.0 && s > -0.5);
    add(p + ".lwp.strong", "rho > 1 and s >= -rho/2", rho > 1.0 && s >= -0.5 * rho);
    add(p + ".unconditional", "rho > 5/2 and s >= 0", rho > 2.5 && s >= 0.0);
    if (s0)
      add(p + ".smoothing", "rho > 5/2, s0 > s >= 0, s0 <= rho - 1 and s0 < s + rho - 5/2",
          rho > 2.5 && *s0 > s && s >= 0.0 && *s0 <= rho - 1.0 && *s0 < s + rho - 2.5);
    break;
  }
  case EquationKind::dNLS:
    add("dnls.unconditional", "rho > 5/2 and s >= 0", rho > 2.5 && s >= 0.0);
    if (s0)
      add("dnls.smoothing", "rho > 5/2, s0 > s >= 0, s0 <= rho - 1 and s0 < s + rho - 5/2",
          rho > 2.5 && *s0 > s && s >= 0.0 && *s0 <= rho - 1.0 && *s0 < s + rho - 2.5);
    break;
  case EquationKind::NLS:
    add("nls.unconditional", "rho > 2/3 and s >= 1/6", rho > 2.0 / 3.0 && s >= 1.0 / 6.0);
    break;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Conservation and smoothing

struct ConservationAudit {
  double max_mean_drift = 0.0;        // max_k |c_0(t_k)|
  double max_relative_l2_drift = 0.0; // max_k | ||u_k||^2 - ||u_0||^2 | / ||u_0||^2  (0/0 := 0)
};

/// The propagator is unimodular, so the audit is the same in either representation.
inline ConservationAudit conservation_audit(const Trajectory& traj)
{
  if (traj.states.empty())
    throw std::invalid_argument("conservation_audit: empty trajectory");
  ConservationAudit out;
  const double m0 = mass(traj.states.front());
  for (const auto& st : traj.states) {
    out.max_mean_drift = std::max(out.max_mean_drift, std::abs(st[0]));
    const double d = std::abs(mass(st) - m0);
    const double rel = m0 > 0.0 ? d / m0 : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.max_relative_l2_drift = std::max(out.max_relative_l2_drift, rel);
  }
  return out;
}

/// Node-wise u(t_k) - u0 in interaction variables.
inline Trajectory smoothing_residual(const Trajectory& traj, const SpectralField& u0)
{
  if (traj.representation != Representation::Interaction)
    throw std::invalid_argument("smoothing_residual: needs interaction representation");
  Trajectory out = traj;
  for (auto& st : out.states)
    st -= u0;
  return out;
}

/// -slope of the least-squares fit of log|c_n| against log n over dyadic shells
/// [2^j, 2^{j+1}) intersected with [band_lo, band_hi]. Within a shell both log|c_n|
/// and log n are averaged over the nonzero coefficients of both signs of n, which
/// makes the fit exact on pure power laws.
inline double fitted_decay_exponent(const SpectralField& f, int band_lo, int band_hi)
{
  if (band_lo < 1 || band_hi > f.max_mode() || band_lo > band_hi)
    throw std::invalid_argument("fitted_decay_exponent: band must lie within [1, N]");
  std::vector<double> lx;
  std::vector<double> ly;
  bool any = false;
  for (int lo = 1; lo <= band_hi; lo *= 2) {
    const int a = std::max(lo, band_lo);
    const int b = std::min(2 * lo - 1, band_hi);
    if (a > b)
      continue;
    double sx = 0.0;
    double sy = 0.0;
    int count = 0;
    for (int n = a; n <= b; ++n)
      for (int sgn : {1, -1}) {
        const double mag = std::abs(f[sgn * n]);
        if (mag > 0.0) {
          sx += std::log(static_cast<double>(n));
          sy += std::log(mag);
          ++count;
        }
      }
    if (count == 0)
      continue;
    any = true;
    lx.push_back(sx / count);
    ly.push_back(sy / count);
  }
  if (!any)
    throw std::invalid_argument("fitted_decay_exponent: all coefficients in the band vanish");
  if (lx.size() < 4)
    throw std::invalid_argument("fitted_decay_exponent: need at least 4 dyadic shells");
  return -detail::ls_slope(lx, ly);
}

// ---------------------------------------------------------------------------
// Reports

struct ToleranceSpec {
  std::optional<double> min_rate;           // fitted_rate >= min_rate
  std::optional<double> max_terminal_error; // errors at the finest mesh <= this
};

struct ConvergenceReport {
  std::string label;
  std::string reference;            // what the errors are measured against
  std::string x_name = "step";      // meaning of mesh_sizes
  std::vector<double> mesh_sizes;   // step sizes, or interval lengths t - r for probes
  std::vector<double> errors;       // discrepancy (or max ratio for probes) per mesh
  double fitted_rate = 0.0;         // least-squares slope of log error vs log mesh
  ToleranceSpec tolerance;
  bool passed = false;
};

namespace detail {

inline double fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2)
    return 0.0;
  return ls_slope(lx, ly);
}

inline void finish(ConvergenceReport& rep)
{
  if (rep.mesh_sizes.size() != rep.errors.size() || rep.mesh_sizes.size() < 3)
    throw std::logic_error("ConvergenceReport: need >= 3 matching mesh/error entries");
  rep.fitted_rate = fit_loglog(rep.mesh_sizes, rep.errors);
  bool ok = std::all_of(rep.errors.begin(), rep.errors.end(), [](double e) { return std::isfinite(e); });
  if (rep.tolerance.min_rate)
    ok = ok && rep.fitted_rate >= *rep.tolerance.min_rate;
  if (rep.tolerance.max_terminal_error) {
    // the finest mesh is the smallest step
    const auto it = std::min_element(rep.mesh_sizes.begin(), rep.mesh_sizes.end());
    ok = ok && rep.errors[static_cast<std::size_t>(it - rep.mesh_sizes.begin())] <= *rep.tolerance.max_terminal_error;
  }
  rep.passed = ok;
}

inline void validate_meshes(const std::vector<std::size_t>& meshes)
{
  if (meshes.size() < 3)
    throw std::invalid_argument("mesh family needs at least 3 meshes");
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (meshes[i] < 1)
      throw std::invalid_argument("mesh family: step counts must be >= 1");
    if (i > 0 && meshes[i] <= meshes[i - 1])
      throw std::invalid_argument("mesh family must be strictly increasing");
  }
}

} // namespace detail

/// Flat CSV: a '#' comment block documenting the columns, then one row per mesh.
inline void write_report_csv(std::ostream& os, const ConvergenceReport& rep)
{
  os << "# report: " << rep.label << '\n'
     << "# reference: " << rep.reference << '\n'
     << "# columns: " << rep.x_name << " = mesh size; error = discrepancy (or max ratio for probes)\n"
     << "# fitted_rate = least-squares slope of log(error) vs log(" << rep.x_name << ")\n"
     << "# fitted_rate=" << num(rep.fitted_rate) << " passed=" << (rep.passed ? 1 : 0);
  if (rep.tolerance.min_rate)
    os << " min_rate=" << num(*rep.tolerance.min_rate);
  if (rep.tolerance.max_terminal_error)
    os << " max_terminal_error=" << num(*rep.tolerance.max_terminal_error);
  os << '\n' << rep.x_name << ",error\n";
  for (std::size_t i = 0; i < rep.errors.size(); ++i)
    os << num(rep.mesh_sizes[i]) << ',' << num(rep.errors[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Convergence studies

struct StudySpec {
  Scheme scheme = Scheme::EulerExponential;
  std::vector<std::size_t> meshes;          // step counts, strictly increasing
  Scheme reference_scheme = Scheme::NormalForm;
  std::size_t reference_steps = 0;          // 0: finest mesh
  ToleranceSpec tolerance;
};

/// Errors ||u_K(tau) - u_ref(tau)||_{L^2} against the reference scheme at its step count.
inline ConvergenceReport convergence_study(const OperatorContext& ctx, const SpectralField& u0,
                                           double tau, const SolverConfig& base, const StudySpec& spec)
{
  detail::validate_meshes(spec.meshes);
  SolverConfig rc = base;
  rc.scheme = spec.reference_scheme;
  rc.step_count = spec.reference_steps ? spec.reference_steps : spec.meshes.back();
  const SpectralField ref = solve(ctx, u0, tau, rc).final_state();

  ConvergenceReport rep;
  rep.label = to_string(ctx.equation) + " " + to_string(spec.scheme);
  rep.reference = to_string(spec.reference_scheme) + " K=" + std::to_string(rc.step_count);
  rep.tolerance = spec.tolerance;
  for (std::size_t K : spec.meshes) {
    SolverConfig c = base;
    c.scheme = spec.scheme;
    c.step_count = K;
    const SpectralField uK =
        (c.scheme == rc.scheme && K == rc.step_count) ? ref : solve(ctx, u0, tau, c).final_state();
    rep.mesh_sizes.push_back(tau / static_cast<double>(K));
    rep.errors.push_back(l2_distance(uK, ref));
  }
  detail::finish(rep);
  return rep;
}

/// Successive differences ||u_{K_{i+1}}(tau) - u_{K_i}(tau)|| for one scheme; mesh i
/// is reported at step tau / K_i. Needs >= 4 meshes for >= 3 differences.
inline ConvergenceReport self_convergence(const OperatorContext& ctx, const SpectralField& u0,
                                          double tau, const SolverConfig& base,
                                          const std::vector<std::size_t>& meshes,
                                          ToleranceSpec tol = {})
{
  detail::validate_meshes(meshes);
  if (meshes.size() < 4)
    throw std::invalid_argument("self_convergence: need at least 4 meshes");
  ConvergenceReport rep;
  rep.label = to_string(ctx.equation) + " " + to_string(base.scheme) + " self-convergence";
  rep.reference = "next finer mesh";
  rep.tolerance = tol;
  std::vector<SpectralField> finals;
  for (std::size_t K : meshes) {
    SolverConfig c = base;
    c.step_count = K;
    finals.push_back(solve(ctx, u0, tau, c).final_state());
  }
  for (std::size_t i = 0; i + 1 < meshes.size(); ++i) {
    rep.mesh_sizes.push_back(tau / static_cast<double>(meshes[i]));
    rep.errors.push_back(l2_distance(finals[i], finals[i + 1]));
  }
  detail::finish(rep);
  return rep;
}

/// ||u^A_K(tau) - u^B_K(tau)|| for two schemes on a common mesh family.
inline ConvergenceReport scheme_discrepancy(const OperatorContext& ctx, const SpectralField& u0,
                                            double tau, const SolverConfig& base, Scheme a, Scheme b,
                                            const std::vector<std::size_t>& meshes,
                                            ToleranceSpec tol = {})
{
  detail::validate_meshes(meshes);
  ConvergenceReport rep;
  rep.label = to_string(ctx.equation) + " " + to_string(a) + " vs " + to_string(b);
  rep.reference = to_string(b) + " on the same mesh";
  rep.tolerance = tol;
  for (std::size_t K : meshes) {
    SolverConfig ca = base;
    ca.scheme = a;
    ca.step_count = K;
    SolverConfig cb = ca;
    cb.scheme = b;
    rep.mesh_sizes.push_back(tau / static_cast<double>(K));
    rep.errors.push_back(l2_distance(solve(ctx, u0, tau, ca).final_state(),
                                     solve(ctx, u0, tau, cb).final_state()));
  }
  detail::finish(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Operator scaling probe

enum class OperatorTag { Bilinear, Trilinear, NlsTrilinear, Resonant, QuinticNN, QuinticNR };

inline std::string to_string(OperatorTag t)
{
  switch (t) {
  case OperatorTag::Bilinear:
    return "bilinear";
  case OperatorTag::Trilinear:
    return "trilinear";
  case OperatorTag::NlsTrilinear:
    return "nls_trilinear";
  case OperatorTag::Resonant:
    return "resonant";
  case OperatorTag::QuinticNN:
    return "quintic_nn";
  case OperatorTag::QuinticNR:
    return "quintic_nr";
  }
  return "?";
}

inline OperatorTag parse_operator_tag(const std::string& s)
{
  for (auto t : {OperatorTag::Bilinear, OperatorTag::Trilinear, OperatorTag::NlsTrilinear,
                 OperatorTag::Resonant, OperatorTag::QuinticNN, OperatorTag::QuinticNR})
    if (to_string(t) == s)
      return t;
  throw std::invalid_argument("unknown operator tag '" + s + "'");
}

inline int operator_arity(OperatorTag t)
{
  switch (t) {
  case OperatorTag::Bilinear:
    return 2;
  case OperatorTag::Trilinear:
  case OperatorTag::NlsTrilinear:
  case OperatorTag::Resonant:
    return 3;
  case OperatorTag::QuinticNN:
  case OperatorTag::QuinticNR:
    return 5;
  }
  return 0;
}

inline bool operator_applies(OperatorTag t, EquationKind eq)
{
  const bool quad = is_quadratic(eq);
  return (t == OperatorTag::Bilinear || t == OperatorTag::Trilinear) ? quad : !quad;
}

/// Evaluates the tagged operator on [r, t] with phases Phi_{t,r} taken from `phase`.
/// The resonant operator enters the equations only through its time integral, so it
/// is probed as (t - r) R(f1, f2, f3).
inline SpectralField apply_operator_with(const OperatorContext& ctx, OperatorTag tag, DirectPhase& phase,
                                         double r, double t, const std::vector<SpectralField>& f)
{
  if (!operator_applies(tag, ctx.equation))
    throw std::invalid_argument("operator '" + to_string(tag) + "' does not apply to " + to_string(ctx.equation));
  if (static_cast<int>(f.size()) != operator_arity(tag))
    throw std::invalid_argument("apply_operator: wrong number of inputs");
  switch (tag) {
  case OperatorTag::Bilinear:
    return bilinear_driver_with(ctx, phase, f[0], f[1]);
  case OperatorTag::Trilinear:
    return trilinear_normal_form_with(ctx, phase, r, f[0], f[1], f[2]);
  case OperatorTag::NlsTrilinear:
    return trilinear_nonresonant_nls_with(ctx, phase, f[0], f[1], f[2]);
  case OperatorTag::Resonant:
    return cplx(t - r) * resonant_cubic(f[0], f[1], f[2]);
  case OperatorTag::QuinticNN:
    return quintic_NN_with(ctx, phase, r, f[0], f[1], f[2], f[3], f[4]);
  case OperatorTag::QuinticNR:
    return quintic_NR_with(ctx, phase, f[0], f[1], f[2], f[3], f[4]);
  }
  throw std::invalid_argument("apply_operator: unknown tag");
}

inline SpectralField apply_operator(const OperatorContext& ctx, OperatorTag tag, double r, double t,
                                    const std::vector<SpectralField>& f)
{
  DirectPhase phase(*ctx.path, r, t);
  return apply_operator_with(ctx, tag, phase, r, t, f);
}

struct ProbeSpec {
  double s = 0.0;
  std::optional<double> s0;     // output regularity; defaults to s
  double gamma = 0.6;
  std::size_t sample_count = 256;
  std::uint64_t seed = 0;
  std::size_t levels = 9;       // t - r = T 2^{-j}, j = 0..levels-1 (T/256 .. T by default)
  double r = 0.0;
  double slack = 0.15;          // pass: fitted exponent >= gamma - slack
  unsigned threads = 1;
};

/// Max over random unit-H^s input tuples of ||out||_{H^{s0}} / prod ||f_i||_{H^s}
/// on dyadic interval lengths; the reported rate is the fitted (t - r)-exponent.
inline ConvergenceReport operator_norm_probe(const OperatorContext& ctx, OperatorTag tag,
                                             const ProbeSpec& spec)
{
  if (spec.levels < 3)
    throw std::invalid_argument("operator_norm_probe: need >= 3 interval lengths");
  if (spec.sample_count < 1)
    throw std::invalid_argument("operator_norm_probe: need >= 1 sample");
  const double T = ctx.horizon() - spec.r;
  if (!(T > 0.0))
    throw std::invalid_argument("operator_norm_probe: r must lie before the horizon");
  const double s0 = spec.s0.value_or(spec.s);
  const int arity = operator_arity(tag);
  const FieldConstraints cons{requires_mean_zero(ctx.equation), false};

  // One fixed tuple set, reused at every interval length.
  std::vector<std::vector<SpectralField>> inputs(spec.sample_count);
  for (std::size_t i = 0; i < spec.sample_count; ++i)
    for (int j = 0; j < arity; ++j) {
      const std::uint64_t sd = derive_seed(derive_seed(spec.seed, i), static_cast<std::uint64_t>(j));
      inputs[i].push_back(normalized(random_field(ctx.max_mode, FieldProfile::white(), sd, cons), spec.s));
    }

  ConvergenceReport rep;
  rep.label = to_string(ctx.equation) + " " + to_string(tag) + " operator probe";
  rep.reference = "ratio ||out||_{H^s0} / prod ||f_i||_{H^s}, s=" + std::to_string(spec.s) +
                  " s0=" + std::to_string(s0);
  rep.x_name = "interval";
  rep.tolerance.min_rate = spec.gamma - spec.slack;
  for (std::size_t j = 0; j < spec.levels; ++j) {
    const double len = T * std::ldexp(1.0, -static_cast<int>(j));
    // one phase memo per worker, shared by that worker's tuples
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(spec.threads, inputs.size()));
    std::vector<DirectPhase> phases;
    phases.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      phases.emplace_back(*ctx.path, spec.r, spec.r + len);
    std::vector<double> ratio(inputs.size(), 0.0);
    parallel_for(inputs.size(), static_cast<unsigned>(workers), [&](std::size_t w, std::size_t i) {
      double denom = 1.0;
      for (const auto& f : inputs[i])
        denom *= sobolev_norm(f, spec.s);
      if (!(denom > 0.0))
        return;
      const auto out = apply_operator_with(ctx, tag, phases[w], spec.r, spec.r + len, inputs[i]);
      ratio[i] = sobolev_norm(out, s0) / denom;
    });
    rep.mesh_sizes.push_back(len);
    rep.errors.push_back(*std::max_element(ratio.begin(), ratio.end()));
  }
  detail::finish(rep);
  return rep;
}

} // namespace modpde
