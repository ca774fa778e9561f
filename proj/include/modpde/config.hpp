#pragma once

// Experiment configuration: INI-style sections with one `key = value` per line.
// Every section and key is checked against the schema below before anything runs.
//
//   [run]          seed, threads, out
//   [equation]     kind (kdv|bo|ilw|dnls|nls), ilw_depth, max_mode
//   [path]         source (fbm|linear|file), hurst, horizon, samples, slope, file
//   [data]         profile (white|power_law|single_mode|zero|file), alpha, mode,
//                  normalize, norm_s, file
//   [solver]       tau, scheme, steps, picard_tol, picard_max_iter, quadrature,
//                  substeps, tau_halvings
//   [converge]     mode (reference|self|pair), scheme, compare, reference_scheme,
//                  reference_steps, meshes, min_rate, max_terminal_error
//   [irregularity] ensemble, gamma, rho, a_max, a_min, points_per_decade, time_grid
//   [probe]        operator, s, s0, gamma, samples, levels
//   [regime]       rho, gamma, s, s0
//
// Seeds: one root seed; components draw from derive_seed(root, stream) with
// stream 1 = path, 2 = initial data, 3 = probe inputs, 4 = ensemble base.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "modpde/diagnostics.hpp"
#include "modpde/modulation.hpp"
#include "modpde/operators.hpp"
#include "modpde/rng.hpp"
#include "modpde/solvers.hpp"
#include "modpde/spectral.hpp"

namespace modpde {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class PathSource { Fbm, Linear, File };
enum class DataProfile { White, PowerLaw, SingleMode, Zero, File };
enum class StudyMode { Reference, Self, Pair };

struct ExperimentConfig {
  // [run]
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = ".";

  // [equation]
  EquationKind equation = EquationKind::KdV;
  double ilw_depth = 1.0;
  int max_mode = 16;

  // [path]
  PathSource path_source = PathSource::Fbm;
  double hurst = 0.3;
  double horizon = 1.0;
  std::size_t path_samples = 16385;
  double slope = 1.0;
  std::string path_file;

  // [data]
  DataProfile profile = DataProfile::PowerLaw;
  double alpha = 2.0;
  int mode = 1;
  bool normalize = true;
  double norm_s = 0.0;
  std::string data_file;

  // [solver]
  double tau = 0.05;
  SolverConfig solver;
  int tau_halvings = 0;

  // [converge]
  StudyMode study_mode = StudyMode::Reference;
  Scheme study_scheme = Scheme::EulerExponential;
  Scheme compare_scheme = Scheme::RiemannMild;
  Scheme reference_scheme = Scheme::NormalForm;
  std::size_t reference_steps = 0;
  std::vector<std::size_t> meshes{32, 64, 128, 256};
  ToleranceSpec tolerance;

  // [irregularity]
  std::size_t ensemble = 20;
  double irr_gamma = 0.6;
  double irr_rho = 0.9;
  double a_max = 1000.0;
  IrregularityGrid grid;

  // [probe]
  OperatorTag probe_operator = OperatorTag::Bilinear;
  double probe_s = 0.0;
  std::optional<double> probe_s0;
  double probe_gamma = 0.6;
  std::size_t probe_samples = 256;
  std::size_t probe_levels = 9;

  // [regime]
  double regime_rho = 1.0;
  double regime_gamma = 0.6;
  double regime_s = 0.0;
  std::optional<double> regime_s0;

  // Sections that were present in the file.
  std::set<std::string> sections;

  std::uint64_t path_seed() const { return derive_seed(seed, 1); }
  std::uint64_t data_seed() const { return derive_seed(seed, 2); }
  std::uint64_t probe_seed() const { return derive_seed(seed, 3); }
  std::uint64_t ensemble_seed(std::size_t i) const { return derive_seed(derive_seed(seed, 4), i); }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema()
{
  static const std::map<std::string, std::set<std::string>> schema{
      {"run", {"seed", "threads", "out"}},
      {"equation", {"kind", "ilw_depth", "max_mode"}},
      {"path", {"source", "hurst", "horizon", "samples", "slope", "file"}},
      {"data", {"profile", "alpha", "mode", "normalize", "norm_s", "file"}},
      {"solver", {"tau", "scheme", "steps", "picard_tol", "picard_max_iter", "quadrature", "substeps",
                  "tau_halvings"}},
      {"converge", {"mode", "scheme", "compare", "reference_scheme", "reference_steps", "meshes", "min_rate",
                    "max_terminal_error"}},
      {"irregularity", {"ensemble", "gamma", "rho", "a_max", "a_min", "points_per_decade", "time_grid"}},
      {"probe", {"operator", "s", "s0", "gamma", "samples", "levels"}},
      {"regime", {"rho", "gamma", "s", "s0"}},
  };
  return schema;
}

inline std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v)
{
  double out = 0.0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
  std::uint64_t out = 0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes")
    return true;
  if (t == "false" || t == "0" || t == "no")
    return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::size_t> parse_list(const std::string& key, const std::string& v)
{
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  return out;
}

template <class F>
auto rethrow_as_config(const std::string& key, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

} // namespace detail

/// Parses and validates a configuration; throws ConfigError on any problem.
inline ExperimentConfig parse_config(std::istream& is)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ExperimentConfig c;
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError("key '" + section + "' outside of a section");
    const auto it = schema.find(section);
    if (it == schema.end())
      throw ConfigError("unknown section [" + section + "]");
    c.sections.insert(section);
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }

  const auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
    const auto node = tree.get_child_optional(pt::ptree::path_type(sec + "." + key, '.'));
    if (!node)
      return std::nullopt;
    return detail::trim(node->data());
  };
  const auto num = [&](const std::string& sec, const std::string& key, double& dst) {
    if (auto v = get(sec, key))
      dst = detail::parse_double(sec + "." + key, *v);
  };
  const auto u64 = [&](const std::string& sec, const std::string& key, auto& dst) {
    if (auto v = get(sec, key))
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(detail::parse_u64(sec + "." + key, *v));
  };

  // [run]
  u64("run", "seed", c.seed);
  u64("run", "threads", c.threads);
  if (auto v = get("run", "out"))
    c.out = *v;

  // [equation]
  if (auto v = get("equation", "kind"))
    c.equation = detail::rethrow_as_config("equation.kind", [&] { return parse_equation(*v); });
  num("equation", "ilw_depth", c.ilw_depth);
  u64("equation", "max_mode", c.max_mode);

  // [path]
  if (auto v = get("path", "source")) {
    if (*v == "fbm")
      c.path_source = PathSource::Fbm;
    else if (*v == "linear")
      c.path_source = PathSource::Linear;
    else if (*v == "file")
      c.path_source = PathSource::File;
    else
      throw ConfigError("path.source: expected fbm|linear|file, got '" + *v + "'");
  }
  num("path", "hurst", c.hurst);
  num("path", "horizon", c.horizon);
  u64("path", "samples", c.path_samples);
  num("path", "slope", c.slope);
  if (auto v = get("path", "file"))
    c.path_file = *v;

  // [data]
  if (auto v = get("data", "profile")) {
    if (*v == "white")
      c.profile = DataProfile::White;
    else if (*v == "power_law")
      c.profile = DataProfile::PowerLaw;
    else if (*v == "single_mode")
      c.profile = DataProfile::SingleMode;
    else if (*v == "zero")
      c.profile = DataProfile::Zero;
    else if (*v == "file")
      c.profile = DataProfile::File;
    else
      throw ConfigError("data.profile: expected white|power_law|single_mode|zero|file, got '" + *v + "'");
  }
  num("data", "alpha", c.alpha);
  u64("data", "mode", c.mode);
  if (auto v = get("data", "normalize"))
    c.normalize = detail::parse_bool("data.normalize", *v);
  num("data", "norm_s", c.norm_s);
  if (auto v = get("data", "file"))
    c.data_file = *v;

  // [solver]
  num("solver", "tau", c.tau);
  if (auto v = get("solver", "scheme"))
    c.solver.scheme = detail::rethrow_as_config("solver.scheme", [&] { return parse_scheme(*v); });
  u64("solver", "steps", c.solver.step_count);
  num("solver", "picard_tol", c.solver.picard_tol);
  u64("solver", "picard_max_iter", c.solver.picard_max_iter);
  if (auto v = get("solver", "quadrature"))
    c.solver.quadrature = detail::rethrow_as_config("solver.quadrature", [&] { return parse_quadrature(*v); });
  u64("solver", "substeps", c.solver.substeps);
  u64("solver", "tau_halvings", c.tau_halvings);

  // [converge]
  if (auto v = get("converge", "mode")) {
    if (*v == "reference")
      c.study_mode = StudyMode::Reference;
    else if (*v == "self")
      c.study_mode = StudyMode::Self;
    else if (*v == "pair")
      c.study_mode = StudyMode::Pair;
    else
      throw ConfigError("converge.mode: expected reference|self|pair, got '" + *v + "'");
  }
  if (auto v = get("converge", "scheme"))
    c.study_scheme = detail::rethrow_as_config("converge.scheme", [&] { return parse_scheme(*v); });
  if (auto v = get("converge", "compare"))
    c.compare_scheme = detail::rethrow_as_config("converge.compare", [&] { return parse_scheme(*v); });
  if (auto v = get("converge", "reference_scheme"))
    c.reference_scheme = detail::rethrow_as_config("converge.reference_scheme", [&] { return parse_scheme(*v); });
  u64("converge", "reference_steps", c.reference_steps);
  if (auto v = get("converge", "meshes"))
    c.meshes = detail::parse_list("converge.meshes", *v);
  if (auto v = get("converge", "min_rate"))
    c.tolerance.min_rate = detail::parse_double("converge.min_rate", *v);
  if (auto v = get("converge", "max_terminal_error"))
    c.tolerance.max_terminal_error = detail::parse_double("converge.max_terminal_error", *v);

  // [irregularity]
  u64("irregularity", "ensemble", c.ensemble);
  num("irregularity", "gamma", c.irr_gamma);
  num("irregularity", "rho", c.irr_rho);
  num("irregularity", "a_max", c.a_max);
  num("irregularity", "a_min", c.grid.a_min);
  u64("irregularity", "points_per_decade", c.grid.points_per_decade);
  u64("irregularity", "time_grid", c.grid.time_grid_size);

  // [probe]
  if (auto v = get("probe", "operator"))
    c.probe_operator = detail::rethrow_as_config("probe.operator", [&] { return parse_operator_tag(*v); });
  num("probe", "s", c.probe_s);
  if (auto v = get("probe", "s0"))
    c.probe_s0 = detail::parse_double("probe.s0", *v);
  num("probe", "gamma", c.probe_gamma);
  u64("probe", "samples", c.probe_samples);
  u64("probe", "levels", c.probe_levels);

  // [regime]
  num("regime", "rho", c.regime_rho);
  num("regime", "gamma", c.regime_gamma);
  num("regime", "s", c.regime_s);
  if (auto v = get("regime", "s0"))
    c.regime_s0 = detail::parse_double("regime.s0", *v);

  // Cross-field validation.
  if (c.threads < 1)
    throw ConfigError("run.threads must be >= 1");
  if (c.max_mode < 1)
    throw ConfigError("equation.max_mode must be >= 1");
  if (!(c.ilw_depth > 0.0))
    throw ConfigError("equation.ilw_depth must be positive");
  if (c.path_source == PathSource::Fbm && !(c.hurst > 0.0 && c.hurst < 1.0))
    throw ConfigError("path.hurst must lie in (0, 1)");
  if (!(c.horizon > 0.0))
    throw ConfigError("path.horizon must be positive");
  if (c.path_samples < 2)
    throw ConfigError("path.samples must be >= 2");
  if (c.path_source == PathSource::File && c.path_file.empty())
    throw ConfigError("path.file is required when path.source = file");
  if (c.profile == DataProfile::File && c.data_file.empty())
    throw ConfigError("data.file is required when data.profile = file");
  if (c.profile == DataProfile::SingleMode && (c.mode == 0 || c.mode > c.max_mode))
    throw ConfigError("data.mode must lie in [1, max_mode]");
  if (!(c.tau > 0.0))
    throw ConfigError("solver.tau must be positive");
  if (c.path_source != PathSource::File && c.tau > c.horizon)
    throw ConfigError("solver.tau must not exceed path.horizon");
  detail::rethrow_as_config("solver", [&] {
    c.solver.validate();
    return 0;
  });
  if (c.tau_halvings < 0 || c.tau_halvings > 8)
    throw ConfigError("solver.tau_halvings must lie in [0, 8]");
  if (c.sections.count("converge"))
    detail::rethrow_as_config("converge.meshes", [&] {
      detail::validate_meshes(c.meshes);
      return 0;
    });
  if (c.study_mode == StudyMode::Self && c.meshes.size() < 4)
    throw ConfigError("converge.meshes: self-convergence needs at least 4 meshes");
  if (c.ensemble < 1)
    throw ConfigError("irregularity.ensemble must be >= 1");
  if (!(c.irr_gamma > 0.0 && c.irr_gamma < 1.0))
    throw ConfigError("irregularity.gamma must lie in (0, 1)");
  if (!(c.irr_rho >= 0.0))
    throw ConfigError("irregularity.rho must be non-negative");
  if (!(c.a_max > 0.0) || !(c.grid.a_min > 0.0) || c.grid.points_per_decade < 1 || c.grid.time_grid_size < 2)
    throw ConfigError("irregularity: degenerate grid");
  if (c.probe_samples < 1 || c.probe_levels < 3)
    throw ConfigError("probe: need samples >= 1 and levels >= 3");
  if (!(c.regime_gamma > 0.5 && c.regime_gamma < 1.0) && c.sections.count("regime"))
    throw ConfigError("regime.gamma must lie in (1/2, 1)");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file)
{
  std::ifstream is(file);
  if (!is)
    throw ConfigError("cannot open config file '" + file.string() + "'");
  return parse_config(is);
}

// ---------------------------------------------------------------------------
// Building objects from a config

inline ModulationPath make_path(const ExperimentConfig& c)
{
  switch (c.path_source) {
  case PathSource::Fbm:
    return generate_fbm(c.hurst, c.horizon, c.path_samples, c.path_seed());
  case PathSource::Linear:
    return linear_path(c.slope, c.horizon, c.path_samples);
  case PathSource::File: {
    std::ifstream is(c.path_file);
    if (!is)
      throw ConfigError("cannot open path file '" + c.path_file + "'");
    try {
      return read_path(is);
    } catch (const std::exception& e) {
      throw ConfigError("path file '" + c.path_file + "': " + e.what());
    }
  }
  }
  throw ConfigError("unknown path source");
}

inline OperatorContext make_context(const ExperimentConfig& c, std::shared_ptr<const ModulationPath> path)
{
  return OperatorContext(c.equation, std::move(path), symbol_for(c.equation, c.ilw_depth), c.max_mode);
}

inline SpectralField make_initial(const ExperimentConfig& c)
{
  const FieldConstraints cons{requires_mean_zero(c.equation), is_quadratic(c.equation) && c.equation != EquationKind::dNLS};
  SpectralField f(c.max_mode, cons.mean_zero, cons.real_valued);
  switch (c.profile) {
  case DataProfile::Zero:
    return f;
  case DataProfile::File: {
    std::ifstream is(c.data_file);
    if (!is)
      throw ConfigError("cannot open data file '" + c.data_file + "'");
    try {
      f = read_field(is);
    } catch (const std::exception& e) {
      throw ConfigError("data file '" + c.data_file + "': " + e.what());
    }
    if (f.max_mode() != c.max_mode)
      throw ConfigError("data file band does not match equation.max_mode");
    break;
  }
  case DataProfile::White:
    f = random_field(c.max_mode, FieldProfile::white(), c.data_seed(), cons);
    break;
  case DataProfile::PowerLaw:
    f = random_field(c.max_mode, FieldProfile::power_law(c.alpha), c.data_seed(), cons);
    break;
  case DataProfile::SingleMode:
    f = random_field(c.max_mode, FieldProfile::single_mode(c.mode), c.data_seed(), cons);
    break;
  }
  if (c.normalize && c.profile != DataProfile::SingleMode && sobolev_norm(f, c.norm_s) > 0.0)
    f = normalized(std::move(f), c.norm_s);
  return f;
}

} // namespace modpde
