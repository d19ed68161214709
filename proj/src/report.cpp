#include "feedlab/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"

namespace feedlab {

namespace {

struct Effect {
    std::string experiment;
    std::string timepoint;
    std::string outcome;
    double estimate, ci_low, ci_high, p;
};

std::vector<Effect> collect_effects(const Json& summary) {
    std::vector<Effect> out;
    if (!summary.contains("experiments")) return out;
    for (const auto& [exp_name, exp] : summary["experiments"].items()) {
        for (const char* block : {"infeed_ate", "post_ate"}) {
            if (!exp.contains(block)) continue;
            for (const auto& [outcome, e] : exp[block].items()) {
                out.push_back({exp_name, block == std::string("infeed_ate") ? "in-feed" : "post",
                               outcome, e.value("estimate", 0.0), e.value("ci_low", 0.0),
                               e.value("ci_high", 0.0), e.value("p", 1.0)});
            }
        }
    }
    return out;
}

} // namespace

std::string render_markdown_report(const AnalysisTables& tables) {
    std::ostringstream md;
    const Json& summary = tables.summary;
    md << "# Study report\n\n";
    md << "Seed: " << summary.value("seed", uint64_t(0)) << "\n\n";

    if (summary.contains("experiments")) {
        for (const auto& [exp_name, exp] : summary["experiments"].items()) {
            md << "## " << exp_name << " exposure experiment\n\n";
            md << "Enrolled: " << exp.value("n_enrolled", 0)
               << ", completed: " << exp.value("n_completed", 0) << "\n\n";
            md << "| outcome | timepoint | estimate | 95% CI | p |\n";
            md << "|---|---|---|---|---|\n";
            for (const auto& e : collect_effects(summary)) {
                if (e.experiment != exp_name) continue;
                md << "| " << e.outcome << " | " << e.timepoint << " | "
                   << format_double(e.estimate) << " | [" << format_double(e.ci_low) << ", "
                   << format_double(e.ci_high) << "] | " << format_double(e.p) << " |\n";
            }
            md << "\n";
            if (exp.contains("aapa_view_share")) {
                const auto& s = exp["aapa_view_share"];
                md << "AAPA view share (intervention period): treatment "
                   << format_double(s.value("treatment", 0.0)) << ", control "
                   << format_double(s.value("control", 0.0)) << " (relative change "
                   << format_double(s.value("relative_change", 0.0)) << ")\n\n";
            }
            if (exp.contains("ri")) {
                md << "Randomization inference: ";
                bool first = true;
                for (const auto& [test, p] : exp["ri"].items()) {
                    if (!first) md << ", ";
                    md << test << " p=" << format_double(p.get<double>());
                    first = false;
                }
                md << "\n\n";
            }
        }
    }

    for (const char* name : {"engagement.csv", "ri_tests.csv", "adjusted_pvalues.csv"}) {
        auto it = tables.csv.find(name);
        if (it == tables.csv.end()) continue;
        md << "## " << name << "\n\n```\n" << it->second << "```\n\n";
    }
    return md.str();
}

std::string render_effects_svg(const AnalysisTables& tables) {
    const std::vector<Effect> effects = collect_effects(tables.summary);
    const int row_height = 22, left = 230, width = 560, pad_top = 30;
    const int height = pad_top + row_height * int(effects.size()) + 30;

    double lo = -1, hi = 1;
    for (const auto& e : effects) {
        lo = std::min(lo, e.ci_low);
        hi = std::max(hi, e.ci_high);
    }
    const double span = hi - lo;
    auto x_of = [&](double v) { return left + (v - lo) / span * (width - left - 20); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' font-family='sans-serif' font-size='11'>\n";
    svg << "<line x1='" << x_of(0) << "' y1='" << pad_top - 10 << "' x2='" << x_of(0) << "' y2='"
        << height - 20 << "' stroke='#999' stroke-dasharray='3,3'/>\n";
    int row = 0;
    for (const auto& e : effects) {
        const int y = pad_top + row * row_height;
        const bool significant = e.ci_low > 0 || e.ci_high < 0;
        svg << "<text x='5' y='" << y + 4 << "'>" << e.experiment << " / " << e.outcome << " ("
            << e.timepoint << ")</text>\n";
        svg << "<line x1='" << x_of(e.ci_low) << "' y1='" << y << "' x2='" << x_of(e.ci_high)
            << "' y2='" << y << "' stroke='#444'/>\n";
        svg << "<circle cx='" << x_of(e.estimate) << "' cy='" << y << "' r='4' fill='"
            << (significant ? "#d62728" : "#aaa") << "'/>\n";
        ++row;
    }
    svg << "<text x='" << left << "' y='" << height - 5 << "'>" << format_double(lo)
        << "</text>\n";
    svg << "<text x='" << width - 40 << "' y='" << height - 5 << "'>" << format_double(hi)
        << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_report(const AnalysisTables& tables, const std::string& out_dir,
                  const std::string& format) {
    std::filesystem::create_directories(out_dir);
    if (format == "csv") {
        write_tables(tables, out_dir);
    } else {
        std::ofstream md(out_dir + "/report.md", std::ios::trunc);
        if (!md) throw Error("StoreWrite", out_dir + "/report.md");
        md << render_markdown_report(tables);
    }
    std::ofstream svg(out_dir + "/effects.svg", std::ios::trunc);
    svg << render_effects_svg(tables);
}

} // namespace feedlab
