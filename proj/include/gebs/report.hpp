#pragma once

#include <string>

#include "gebs/experiments.hpp"

namespace gebs {

/// %.6g rendering shared by every output format.
std::string format_number(double v);

/// CSV: `# key=value` config echo and notes, then a fixed header and rows.
std::string render_csv(const ExperimentReport& report);
std::string render_json(const ExperimentReport& report);
std::string render(const ExperimentReport& report, Format format);

/// Writes the rendered report; throws WriteError on I/O failure.
void emit_report(const ExperimentReport& report, Format format, const std::string& path);

/// Inverse of render_json (numbers at their rendered precision).
ExperimentReport parse_json_report(const std::string& text);

/// Config echoed in a CSV or JSON report.
ExperimentConfig config_from_report(const std::string& text);

}  // namespace gebs
