#pragma once
// Experiment configuration shared by every subcommand: an INI-style file
// (`key = value` lines under `[section]` headers) overridden by flags.
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace CLI {
class App;
}

namespace flipconc::cli {

struct ExperimentConfig {
  // [experiment]
  std::string torus = "10";
  std::string rates = "independent:1";
  std::string potential;
  double beta = 1.0;
  std::string init = "product";
  std::string t_grid = "0.5";
  std::string family = "monomials:2";
  std::string observable;
  std::uint64_t seed = 1;
  // [bounds]
  std::string theorem = "31";
  double constant = 0.0;
  std::string hjc = "square,square";
  // [evolve]
  double t0 = 0.0;
  double t1 = 1.0;
  int steps = 10;
  // [symbolic]
  std::string gen;
  std::string A = "0";
  int n = 5;
  // [nogo]
  int window = 2;
  // [mc]
  int sites_per_dim = 0;
  std::string t = "1";
  int replicas = 10000;
  // [output]
  std::string out = "report.json";
  std::string csv;
  std::string report;
  std::string curve;
  // [limits]
  int exact_cap = 20;
  int symbolic_cap = 8;
  int workers = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

using FieldMember = std::variant<std::string ExperimentConfig::*, double ExperimentConfig::*,
                                 int ExperimentConfig::*, std::uint64_t ExperimentConfig::*>;

struct ConfigField {
  const char* section;
  const char* key;  ///< config key; the flag is "--" + key
  const char* help;
  FieldMember member;
};

const std::vector<ConfigField>& config_fields();

/// Reads `key = value` lines; unknown keys or misplaced sections throw ParseError.
void apply_config(std::istream& in, ExperimentConfig& cfg);
void apply_config_file(const std::string& path, ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);

/// Every field, grouped by section, doubles with 17 significant digits.
std::string serialize_config(const ExperimentConfig& cfg);

/// Registers one flag per field on `app`, bound to `flags`.
void register_flags(CLI::App& app, ExperimentConfig& flags);

/// Copies the fields whose flag was given on the command line.
void apply_flags(const CLI::App& app, const ExperimentConfig& flags, ExperimentConfig& cfg);

}  // namespace flipconc::cli
