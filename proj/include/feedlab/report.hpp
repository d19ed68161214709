#pragma once

#include <string>

#include "feedlab/analyze.hpp"

namespace feedlab {

// Markdown report: headline effects with CIs per experiment and timepoint,
// engagement and randomization-inference tables.
std::string render_markdown_report(const AnalysisTables& tables);

// Static figure (SVG): one CI whisker per outcome x timepoint, one panel
// per experiment, polarization on top and emotions below.
std::string render_effects_svg(const AnalysisTables& tables);

// Writes report.md (or the CSVs when format == "csv") plus effects.svg.
void write_report(const AnalysisTables& tables, const std::string& out_dir,
                  const std::string& format);

} // namespace feedlab
