#pragma once

// Run artifacts. Everything a command produces is written into a staging
// directory next to the destination and moved into place only after all files
// are complete, so an interrupted run never leaves half-written outputs behind.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "modpde/diagnostics.hpp"
#include "modpde/format.hpp"
#include "modpde/solvers.hpp"
#include "modpde/spectral.hpp"

namespace modpde {

namespace fs = std::filesystem;


/// Output stream fixed to the classic locale and round-trip precision.
inline std::ofstream open_output(const fs::path& p)
{
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  return os;
}

class StagedOutput {
public:
  explicit StagedOutput(fs::path destination) : dest_(fs::absolute(std::move(destination)).lexically_normal())
  {
    if (!dest_.has_filename())
      dest_ = dest_.parent_path();
    // hidden sibling, so the destination only appears on commit
    stage_ = dest_.parent_path() / ("." + dest_.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(stage_);
    fs::create_directories(stage_);
  }

  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  ~StagedOutput()
  {
    std::error_code ec;
    fs::remove_all(stage_, ec);
  }

  /// Path inside the staging area; parent directories are created.
  fs::path file(const fs::path& rel) const
  {
    const fs::path p = stage_ / rel;
    fs::create_directories(p.parent_path());
    return p;
  }

  /// Moves every staged top-level entry over its destination counterpart.
  void commit()
  {
    fs::create_directories(dest_);
    for (const auto& entry : fs::directory_iterator(stage_)) {
      const fs::path target = dest_ / entry.path().filename();
      if (entry.is_directory() && fs::exists(target))
        fs::remove_all(target);
      fs::rename(entry.path(), target);
    }
    fs::remove_all(stage_);
  }

  const fs::path& destination() const noexcept { return dest_; }

private:
  fs::path dest_;
  fs::path stage_;
};

// ---------------------------------------------------------------------------
// Trajectory export: <dir>/manifest.txt plus one field file per node.
//   # traj v1 eq=<kind> K=<steps> tau=<tau>
//   # representation=<interaction|physical> gauge=<none|ungauged>
//   k t file

inline std::string node_file_name(std::size_t k)
{
  std::ostringstream os;
  os << "node_" << std::setw(5) << std::setfill('0') << k << ".field";
  return os.str();
}

inline void write_trajectory(const fs::path& dir, const Trajectory& traj, double tau, const std::string& gauge_note)
{
  fs::create_directories(dir);
  auto man = open_output(dir / "manifest.txt");
  man << "# traj v1 eq=" << to_string(traj.ctx.equation) << " K=" << traj.size() - 1 << " tau=" << num(tau) << '\n'
      << "# representation=" << (traj.representation == Representation::Interaction ? "interaction" : "physical")
      << " gauge=" << gauge_note << '\n'
      << "k t file\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::string name = node_file_name(k);
    man << k << ' ' << num(traj.times[k]) << ' ' << name << '\n';
    auto os = open_output(dir / name);
    write_field(os, traj.states[k]);
  }
  if (!man)
    throw std::runtime_error("failed writing trajectory manifest");
}

struct ManifestEntry {
  std::size_t k = 0;
  double t = 0.0;
  std::string file;
};

struct TrajectoryManifest {
  std::string equation;
  std::size_t steps = 0;
  double tau = 0.0;
  std::vector<ManifestEntry> entries;
};

inline TrajectoryManifest read_manifest(const fs::path& file)
{
  std::ifstream is(file);
  if (!is)
    throw std::runtime_error("cannot open manifest '" + file.string() + "'");
  is.imbue(std::locale::classic());
  TrajectoryManifest m;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# traj v1 ", 0) != 0)
    throw std::runtime_error("manifest: missing '# traj v1' header");
  std::istringstream head(line.substr(10));
  head.imbue(std::locale::classic());
  std::string tok;
  while (head >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("manifest: malformed header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "eq")
      m.equation = val;
    else if (key == "K")
      m.steps = std::stoul(val);
    else if (key == "tau")
      m.tau = std::stod(val);
  }
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line == "k t file")
      continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    ManifestEntry e;
    if (!(row >> e.k >> e.t >> e.file))
      throw std::runtime_error("manifest: malformed row '" + line + "'");
    m.entries.push_back(e);
  }
  if (m.entries.size() != m.steps + 1)
    throw std::runtime_error("manifest: expected K+1 rows");
  return m;
}

/// Per-node conserved quantities (identical in interaction and physical variables).
inline void write_audit_csv(std::ostream& os, const Trajectory& traj, const ConservationAudit& audit)
{
  os << "# audit of conserved quantities per node\n"
     << "# mean_abs = |c_0|; mass = ||u(t_k)||_{L^2}^2; rel_mass_drift = |mass - mass(0)| / mass(0) (0 when both vanish)\n"
     << "# max_mean_drift=" << num(audit.max_mean_drift) << " max_relative_l2_drift=" << num(audit.max_relative_l2_drift)
     << '\n'
     << "k,t,mean_abs,mass,rel_mass_drift\n";
  const double m0 = mass(traj.states.front());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double m = mass(traj.states[k]);
    const double d = std::abs(m - m0);
    const double drift = m0 > 0.0 ? d / m0 : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    os << k << ',' << num(traj.times[k]) << ',' << num(std::abs(traj.states[k][0])) << ',' << num(m) << ',' << num(drift) << '\n';
  }
}

} // namespace modpde
