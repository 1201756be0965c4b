#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/report.hpp"
#include "flipconc/concentration.hpp"
#include "flipconc/gibbs.hpp"
#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"

namespace flipconc::cli {

struct Context {
  ExperimentConfig cfg;
  std::ostream& out;
};

struct CommandResult {
  Json report = Json::object();
  CsvTable table;
  std::size_t violations = 0;
  std::string inequality;  ///< named in the failure message when violations > 0
  bool write_files = true;
};

using CommandFn = CommandResult (*)(const Context&);

struct CommandInfo {
  const char* name;
  const char* help;
  CommandFn fn;
};

const std::vector<CommandInfo>& commands();

// Resolution of configuration strings into library objects.
std::vector<double> parse_time_grid(const std::string& spec);
Torus resolve_torus(const ExperimentConfig& cfg);
/// The potential named by --potential or by a glauber rate string, times beta.
std::optional<Potential> resolve_potential(const ExperimentConfig& cfg);
RateModel resolve_rates(const ExperimentConfig& cfg, const Torus& torus);
DistributionVector resolve_initial(const ExperimentConfig& cfg, const RateModel& rates);
/// Whether the initial measure is the uniform product measure.
bool initial_is_uniform_product(const ExperimentConfig& cfg);
std::vector<Observable> resolve_observables(const ExperimentConfig& cfg, int sites);

}  // namespace flipconc::cli
