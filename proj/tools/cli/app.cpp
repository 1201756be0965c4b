#include "cli/app.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/report.hpp"
#include "flipconc/errors.hpp"
#include "flipconc/parallel.hpp"

namespace flipconc::cli {

namespace {

Json config_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for (const auto& f : config_fields()) {
    std::visit([&](auto member) { j[f.section][f.key] = cfg.*member; }, f.member);
  }
  return j;
}

std::string csv_path_for(const ExperimentConfig& cfg) {
  if (!cfg.csv.empty()) return cfg.csv;
  std::filesystem::path p(cfg.out);
  p.replace_extension(".csv");
  return p.string();
}

int execute(const CommandInfo& cmd, const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.workers > 0) set_worker_count(static_cast<std::size_t>(cfg.workers));
  if (cfg.workers < 0) throw ParseError("workers must be nonnegative");
  Context ctx{cfg, out};
  CommandResult result = cmd.fn(ctx);
  if (result.write_files && !cfg.out.empty()) {
    result.report["kind"] = result.report.value("kind", std::string(cmd.name));
    result.report["command"] = cmd.name;
    result.report["config"] = config_json(cfg);
    result.report["violations"] = result.violations;
    const std::string stamp = timestamp_utc();
    write_report_file(cfg.out, result.report, stamp);
    if (!result.table.empty()) write_csv_file(csv_path_for(cfg), result.table, stamp);
  }
  if (result.violations > 0) {
    err << "invariant violated (" << result.violations << " case" << (result.violations == 1 ? "" : "s")
        << "): " << result.inequality << '\n';
    return kExitViolation;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact and Monte Carlo checks of concentration inequalities for spin-flip dynamics", "flipconc"};
  app.require_subcommand(1);
  ExperimentConfig flags;
  register_flags(app, flags);
  std::string config_path;
  std::string write_config;
  app.add_option("--config", config_path, "Configuration file ([section] key = value)");
  app.add_option("--write-config", write_config, "Write the effective configuration to this file");

  std::vector<std::pair<CLI::App*, const CommandInfo*>> subs;
  for (const auto& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->fallthrough();
    subs.emplace_back(sub, &cmd);
  }
  CLI::App* plot = app.add_subcommand("plot", "Write plot columns (t value bound) from a JSON report");
  plot->fallthrough();

  std::vector<std::string> argv_store{"flipconc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    apply_flags(app, flags, cfg);
    if (!write_config.empty()) {
      std::ofstream wc(write_config);
      if (!wc) throw ParseError("cannot write " + write_config);
      wc << serialize_config(cfg);
    }
    if (plot->parsed()) {
      if (cfg.report.empty()) throw ParseError("plot needs --report");
      emit_plot_data_file(cfg.report, cfg.curve, cfg.out);
      return kExitOk;
    }
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return execute(*cmd, cfg, out, err);
    }
    throw ParseError("no subcommand given");
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << '\n';
    return kExitViolation;
  } catch (const std::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace flipconc::cli
