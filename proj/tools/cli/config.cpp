#include "cli/config.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc::cli {

using C = ExperimentConfig;

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"experiment", "torus", "Torus sides, e.g. 10 or 4x4", &C::torus},
      {"experiment", "rates", "independent:R | glauber:POTFILE | perturbed:EPSFILE | generator:GENFILE", &C::rates},
      {"experiment", "potential", "Potential file (defaults to the one named by --rates)", &C::potential},
      {"experiment", "beta", "Factor multiplying the potential", &C::beta},
      {"experiment", "init", "gibbs | product[:P] | dirac:BITS | file:PATH", &C::init},
      {"experiment", "t-grid", "A:B:N or a comma separated list of times", &C::t_grid},
      {"experiment", "family", "monomials:K | random:N:SEED | file:PATH", &C::family},
      {"experiment", "observable", "Observable file (coeff : sites lines, --- between functions)", &C::observable},
      {"experiment", "seed", "Base seed", &C::seed},
      {"bounds", "theorem", "31 | 52 | 53 | hjc", &C::theorem},
      {"bounds", "constant", "Certified constant of the initial measure (0 = automatic)", &C::constant},
      {"bounds", "hjc", "H,J pair of builtin functions", &C::hjc},
      {"evolve", "t0", "Start time", &C::t0},
      {"evolve", "t1", "End time", &C::t1},
      {"evolve", "steps", "Number of time steps", &C::steps},
      {"symbolic", "gen", "Generator file (lambda : sites lines)", &C::gen},
      {"symbolic", "A", "Monomial support, e.g. \"0,1\"", &C::A},
      {"symbolic", "n", "Largest power / series order", &C::n},
      {"nogo", "window", "Largest window radius", &C::window},
      {"mc", "sites-per-dim", "Side length of a cubic torus (0 = use --torus)", &C::sites_per_dim},
      {"mc", "t", "Times for the ensemble (same syntax as --t-grid)", &C::t},
      {"mc", "replicas", "Number of replicas", &C::replicas},
      {"output", "out", "JSON report path (plot: column file path)", &C::out},
      {"output", "csv", "CSV table path (defaults to the report path with .csv)", &C::csv},
      {"output", "report", "JSON report read by plot", &C::report},
      {"output", "curve", "Curve written by plot (default: first available)", &C::curve},
      {"limits", "exact-cap", "Largest torus for exact evolution", &C::exact_cap},
      {"limits", "symbolic-cap", "Largest generator power", &C::symbolic_cap},
      {"limits", "workers", "Worker threads (0 = FLIPCONC_WORKERS or hardware)", &C::workers},
  };
  return fields;
}

namespace {

const ConfigField* find_field(const std::string& key) {
  for (const auto& f : config_fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw ParseError("config: bad value '" + text + "' for " + key);
  return v;
}

void assign(const ConfigField& f, ExperimentConfig& cfg, const std::string& value) {
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          cfg.*member = value;
        } else {
          cfg.*member = parse_number<T>(f.key, value);
        }
      },
      f.member);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find('"') != std::string::npos) throw ParseError("config: value contains a double quote: " + s);
  return "\"" + s + "\"";
}

}  // namespace

void apply_config(std::istream& in, ExperimentConfig& cfg) {
  CLI::ConfigINI reader;
  std::vector<CLI::ConfigItem> items;
  try {
    items = reader.from_config(in);
  } catch (const CLI::Error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const ConfigField* f = find_field(item.name);
    if (f == nullptr) throw ParseError("config: unknown key '" + item.name + "'");
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == f->section)) {
      throw ParseError("config: key '" + item.name + "' belongs to section [" + f->section + "]");
    }
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? " " : "") + item.inputs[k];
    assign(*f, cfg, value);
  }
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  apply_config(in, cfg);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  apply_config(in, cfg);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : config_fields()) {
    if (section != f.section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out << quote(cfg.*member);
          } else if constexpr (std::is_same_v<T, double>) {
            out << format_double(cfg.*member);
          } else {
            out << cfg.*member;
          }
        },
        f.member);
    out << '\n';
  }
  return out.str();
}

void register_flags(CLI::App& app, ExperimentConfig& flags) {
  for (const auto& f : config_fields()) {
    std::visit([&](auto member) { app.add_option(std::string("--") + f.key, flags.*member, f.help); },
               f.member);
  }
}

void apply_flags(const CLI::App& app, const ExperimentConfig& flags, ExperimentConfig& cfg) {
  for (const auto& f : config_fields()) {
    const CLI::Option* opt = app.get_option_no_throw(std::string("--") + f.key);
    if (opt == nullptr || opt->count() == 0) continue;
    std::visit([&](auto member) { cfg.*member = flags.*member; }, f.member);
  }
}

}  // namespace flipconc::cli
