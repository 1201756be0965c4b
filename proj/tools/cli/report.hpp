#pragma once
// JSON reports, CSV tables and plot-ready column files.
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace flipconc::cli {

using Json = nlohmann::json;

/// Rows of scalar JSON values; numbers are written with the JSON
/// serializer so CSV cells and report fields share one text form.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;
  bool empty() const { return header.empty(); }
};

/// A JSON value as a single token: numbers and booleans as the JSON
/// serializer prints them, strings unquoted.
std::string cell_text(const Json& v);

void write_csv(std::ostream& out, const CsvTable& table);

/// Current UTC time as ISO 8601.
std::string timestamp_utc();

/// Writes `report` with a `generated` timestamp field, indented so the
/// timestamp occupies a line of its own.
void write_report_file(const std::string& path, Json report, const std::string& stamp);
/// The CSV gets a leading `# generated ...` line.
void write_csv_file(const std::string& path, const CsvTable& table, const std::string& stamp);

/// Column layout of a figure curve: field names read from each record of
/// the report's `series` array, x column first.
struct CurveSpec {
  std::string name;
  std::vector<std::string> fields;
};

/// Curves available for a report kind, in default order.
std::vector<CurveSpec> curves_for(const std::string& kind);

/// Writes whitespace separated columns for `curve` (or the first curve of
/// the report kind when empty). Reports without a series produce no
/// output. Fields missing from the first record are dropped for every row.
void emit_plot_data(const Json& report, const std::string& curve, std::ostream& out);
void emit_plot_data_file(const std::string& report_path, const std::string& curve, const std::string& out_path);

}  // namespace flipconc::cli
