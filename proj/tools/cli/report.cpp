#include "cli/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc::cli {

std::string cell_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
  if (!table.header.empty()) out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::string cell = cell_text(row[k]);
      if (cell.find_first_of(",\"") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : cell) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        cell = quoted + "\"";
      }
      out << (k ? "," : "") << cell;
    }
    out << '\n';
  }
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_report_file(const std::string& path, Json report, const std::string& stamp) {
  report["generated"] = stamp;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write report " + path);
  out << report.dump(2) << '\n';
}

void write_csv_file(const std::string& path, const CsvTable& table, const std::string& stamp) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write table " + path);
  out << "# generated " << stamp << '\n';
  write_csv(out, table);
}

std::vector<CurveSpec> curves_for(const std::string& kind) {
  if (kind == "theorem31") return {{"bound", {"t", "C_hat", "composite"}}, {"K", {"t", "K"}}};
  if (kind == "theorem52") return {{"bound", {"t", "C_hat", "composite"}}, {"K", {"t", "K"}}};
  if (kind == "theorem53") return {{"bound", {"t", "max_ratio", "C"}}};
  if (kind == "hjc") return {{"bound", {"t", "worst_fraction", "limit"}}, {"K", {"t", "K"}}};
  if (kind == "gcb-scan" || kind == "uvb-check") return {{"bound", {"t", "C_hat", "reference"}}};
  if (kind == "evolve") return {{"tv", {"t", "tv"}}};
  if (kind == "nogo") return {{"tv", {"t", "tv"}}, {"H", {"t", "H"}}, {"gcb", {"t", "gcb_hat"}}};
  if (kind == "symbolic-bound") return {{"bound", {"n", "sup", "bound"}}};
  return {};
}

void emit_plot_data(const Json& report, const std::string& curve, std::ostream& out) {
  if (!report.is_object() || !report.contains("series") || !report["series"].is_array() ||
      report["series"].empty()) {
    return;
  }
  const std::string kind = report.value("kind", "");
  const auto curves = curves_for(kind);
  const CurveSpec* chosen = nullptr;
  for (const auto& c : curves) {
    if (curve.empty() || c.name == curve) {
      chosen = &c;
      break;
    }
  }
  if (chosen == nullptr) {
    if (curve.empty()) return;
    throw ParseError("report kind '" + kind + "' has no curve '" + curve + "'");
  }
  const Json& series = report["series"];
  std::vector<std::string> fields;
  for (const auto& f : chosen->fields) {
    if (series[0].contains(f) && !series[0][f].is_null()) fields.push_back(f);
  }
  for (const auto& rec : series) {
    for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? " " : "") << cell_text(rec.at(fields[k]));
    out << '\n';
  }
}

void emit_plot_data_file(const std::string& report_path, const std::string& curve, const std::string& out_path) {
  std::ifstream in(report_path);
  if (!in) throw ParseError("cannot open report " + report_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  Json report;
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      report = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("report is not valid JSON: ") + e.what());
    }
  }
  std::ofstream out(out_path);
  if (!out) throw ParseError("cannot write " + out_path);
  emit_plot_data(report, curve, out);
}

}  // namespace flipconc::cli
