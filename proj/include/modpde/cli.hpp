#pragma once

// Subcommands of the experiment runner. Each takes a validated config (with
// command-line overrides already applied) and returns the process exit code:
//   0 success; 1 configuration or input error; 2 Picard non-convergence;
//   3 a pass/fail threshold was not met.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "modpde/config.hpp"
#include "modpde/diagnostics.hpp"
#include "modpde/io.hpp"
#include "modpde/modulation.hpp"
#include "modpde/operators.hpp"
#include "modpde/parallel.hpp"
#include "modpde/solvers.hpp"

namespace modpde {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPicard = 2, kExitThreshold = 3 };

namespace detail {

/// Runs body(); maps library exceptions onto the exit-code contract.
template <class Body>
int guarded(std::ostream& err, Body&& body)
{
  try {
    return body();
  } catch (const PicardDivergence& e) {
    err << "error: " << e.what() << '\n';
    return kExitPicard;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline std::string describe(const ExperimentConfig& c)
{
  std::string out = "# eq=" + to_string(c.equation) + " N=" + std::to_string(c.max_mode) + " tau=" + num(c.tau) +
                    " seed=" + std::to_string(c.seed);
  if (c.path_source == PathSource::Fbm)
    out += " path=fbm H=" + num(c.hurst) + " samples=" + std::to_string(c.path_samples);
  else if (c.path_source == PathSource::Linear)
    out += " path=linear slope=" + num(c.slope);
  else
    out += " path=file";
  return out;
}

} // namespace detail

/// Solves once and writes the trajectory (physical variables; NLS un-gauged)
/// and the conservation audit.
inline int cmd_simulate(const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  return detail::guarded(err, [&] {
    auto path = std::make_shared<const ModulationPath>(make_path(c));
    const OperatorContext ctx = make_context(c, path);
    const SpectralField u0 = make_initial(c);

    double tau = c.tau;
    Trajectory traj = [&] {
      if (c.solver.scheme == Scheme::NormalForm && c.tau_halvings > 0) {
        auto t = solve_normal_form_adaptive(ctx, u0, tau, c.solver, c.tau_halvings);
        tau = t.times.back();
        return t;
      }
      return solve(ctx, u0, tau, c.solver);
    }();
    if (tau != c.tau)
      err << "warning: Picard failed at tau=" << c.tau << "; accepted tau=" << tau << '\n';

    const ConservationAudit audit = conservation_audit(traj);
    Trajectory phys = convert(traj, Representation::Physical);
    std::string gauge = "none";
    if (c.equation == EquationKind::NLS) {
      phys = gauge_transform(phys, mass(u0), GaugeDirection::Inverse);
      gauge = "ungauged";
    }

    StagedOutput out(c.out);
    write_trajectory(out.file("trajectory/manifest.txt").parent_path(), phys, tau, gauge);
    {
      auto os = open_output(out.file("audit.csv"));
      os << detail::describe(c) << " scheme=" << to_string(c.solver.scheme) << '\n';
      write_audit_csv(os, traj, audit);
    }
    {
      auto os = open_output(out.file("path.txt"));
      write_path(os, *path);
    }
    out.commit();
    log << "simulate: " << to_string(c.equation) << " K=" << c.solver.step_count << " tau=" << tau
        << " picard_iterations=" << traj.picard_iterations;
    if (requires_mean_zero(c.equation))
      log << " mean_drift=" << audit.max_mean_drift;
    log << " l2_drift=" << audit.max_relative_l2_drift << '\n';
    return int{kExitOk};
  });
}

/// Mesh-refinement study in one of three modes; writes convergence.csv.
inline int cmd_converge(const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  return detail::guarded(err, [&] {
    if (!c.sections.count("converge"))
      throw ConfigError("converge needs a [converge] section");
    auto path = std::make_shared<const ModulationPath>(make_path(c));
    const OperatorContext ctx = make_context(c, path);
    const SpectralField u0 = make_initial(c);

    ConvergenceReport rep;
    switch (c.study_mode) {
    case StudyMode::Reference: {
      StudySpec spec;
      spec.scheme = c.study_scheme;
      spec.meshes = c.meshes;
      spec.reference_scheme = c.reference_scheme;
      spec.reference_steps = c.reference_steps;
      spec.tolerance = c.tolerance;
      rep = convergence_study(ctx, u0, c.tau, c.solver, spec);
      break;
    }
    case StudyMode::Self: {
      SolverConfig base = c.solver;
      base.scheme = c.study_scheme;
      rep = self_convergence(ctx, u0, c.tau, base, c.meshes, c.tolerance);
      break;
    }
    case StudyMode::Pair:
      rep = scheme_discrepancy(ctx, u0, c.tau, c.solver, c.study_scheme, c.compare_scheme, c.meshes, c.tolerance);
      break;
    }

    StagedOutput out(c.out);
    {
      auto os = open_output(out.file("convergence.csv"));
      os << detail::describe(c) << '\n';
      write_report_csv(os, rep);
    }
    out.commit();
    log << "converge: " << rep.label << " rate=" << rep.fitted_rate << " terminal=" << rep.errors.back()
        << (rep.passed ? " PASS" : " FAIL") << '\n';
    return rep.passed ? int{kExitOk} : int{kExitThreshold};
  });
}

/// Irregularity estimates over a path ensemble (fBm) or for a single fixed path.
inline int cmd_irregularity(const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  return detail::guarded(err, [&] {
    struct Row {
      std::uint64_t seed = 0;
      double rho_hat = 0.0;
      IrregularityEstimate est;
      double limit = 0.0;
    };
    const bool ensemble = c.path_source == PathSource::Fbm;
    const std::size_t members = ensemble ? c.ensemble : 1;
    // validate the fixed path before spawning work
    std::unique_ptr<ModulationPath> fixed;
    if (!ensemble)
      fixed = std::make_unique<ModulationPath>(make_path(c));

    std::vector<Row> rows(members);
    parallel_for(members, c.threads, [&](std::size_t, std::size_t i) {
      Row r;
      std::unique_ptr<ModulationPath> own;
      const ModulationPath* p = fixed.get();
      if (ensemble) {
        r.seed = c.ensemble_seed(i);
        own = std::make_unique<ModulationPath>(generate_fbm(c.hurst, c.horizon, c.path_samples, r.seed));
        p = own.get();
      }
      r.rho_hat = estimate_rho(*p, c.irr_gamma, c.a_max, c.grid);
      r.est = irregularity_norm(*p, c.irr_rho, c.irr_gamma, c.a_max, c.grid);
      r.limit = resolution_limit(*p);
      rows[i] = r;
    });

    StagedOutput out(c.out);
    {
      auto os = open_output(out.file("irregularity.csv"));
      os << detail::describe(c) << '\n'
         << "# rho_hat = fitted decay exponent of the grid sup in <a> over a in [a_min, a_max]\n"
         << "# norm_estimate = grid sup of <a>^rho |Phi_{t,r}(a)| / (t-r)^gamma\n"
         << "# resolution_limit = pi / median |w_{k+1} - w_k|; frequencies above it are not resolved by the samples\n"
         << "member,seed,rho_hat,norm_estimate,rho,gamma,a_max,a_grid_size,time_grid_size,resolution_limit\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << i << ',' << r.seed << ',' << num(r.rho_hat) << ',' << num(r.est.norm_estimate) << ','
           << num(r.est.rho) << ',' << num(r.est.gamma) << ',' << num(r.est.a_max) << ',' << r.est.a_grid_size << ','
           << r.est.time_grid_size << ',' << num(r.limit) << '\n';
      }
    }
    out.commit();
    std::vector<double> rho;
    for (const auto& r : rows)
      rho.push_back(r.rho_hat);
    std::sort(rho.begin(), rho.end());
    const double median = rho.size() % 2 ? rho[rho.size() / 2] : 0.5 * (rho[rho.size() / 2 - 1] + rho[rho.size() / 2]);
    log << "irregularity: " << rows.size() << " path(s), median rho_hat=" << median << '\n';
    return int{kExitOk};
  });
}

/// Operator scaling probe; exit 3 when the fitted interval exponent falls short.
inline int cmd_probe(const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  return detail::guarded(err, [&] {
    auto path = std::make_shared<const ModulationPath>(make_path(c));
    const OperatorContext ctx = make_context(c, path);
    ProbeSpec spec;
    spec.s = c.probe_s;
    spec.s0 = c.probe_s0;
    spec.gamma = c.probe_gamma;
    spec.sample_count = c.probe_samples;
    spec.levels = c.probe_levels;
    spec.seed = c.probe_seed();
    spec.threads = c.threads;
    const ConvergenceReport rep = operator_norm_probe(ctx, c.probe_operator, spec);

    StagedOutput out(c.out);
    {
      auto os = open_output(out.file("probe.csv"));
      os << detail::describe(c) << " operator=" << to_string(c.probe_operator) << '\n';
      write_report_csv(os, rep);
    }
    out.commit();
    log << "probe: " << rep.label << " exponent=" << rep.fitted_rate << " (need >= " << *rep.tolerance.min_rate
        << ")" << (rep.passed ? " PASS" : " FAIL") << '\n';
    return rep.passed ? int{kExitOk} : int{kExitThreshold};
  });
}

/// Which well-posedness claims hold for the given (rho, gamma, s[, s0]).
inline int cmd_regime(const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  return detail::guarded(err, [&] {
    if (!c.sections.count("regime"))
      throw ConfigError("regime needs a [regime] section");
    const RegimeVerdict v = regime_check(c.equation, c.regime_rho, c.regime_gamma, c.regime_s, c.regime_s0);
    StagedOutput out(c.out);
    {
      auto os = open_output(out.file("regime.csv"));
      os << "# eq=" << to_string(c.equation) << " rho=" << num(v.rho) << " gamma=" << num(v.gamma) << " s=" << num(v.s);
      if (v.s0)
        os << " s0=" << num(*v.s0);
      os << "\nclaim,condition,satisfied\n";
      for (const auto& cl : v.claims)
        os << cl.tag << ",\"" << cl.condition << "\"," << (cl.satisfied ? 1 : 0) << '\n';
    }
    out.commit();
    for (const auto& cl : v.claims)
      log << (cl.satisfied ? "  holds   " : "  fails   ") << cl.tag << "  [" << cl.condition << "]\n";
    return int{kExitOk};
  });
}

inline int run_command(const std::string& name, const ExperimentConfig& c, std::ostream& log, std::ostream& err)
{
  if (name == "simulate")
    return cmd_simulate(c, log, err);
  if (name == "converge")
    return cmd_converge(c, log, err);
  if (name == "irregularity")
    return cmd_irregularity(c, log, err);
  if (name == "probe")
    return cmd_probe(c, log, err);
  if (name == "regime")
    return cmd_regime(c, log, err);
  err << "unknown subcommand '" << name << "'\n";
  return kExitConfig;
}

} // namespace modpde
