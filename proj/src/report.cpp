#include <cstdio>
#include <sstream>
#include <string>

#include "arcnca/evaluator.hpp"

namespace arcnca {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string percent(double rate) {
    return fixed(rate * 100.0, 1) + "%";
}

std::string scientific(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

std::string csv_label(const std::vector<std::string>& members) {
    std::string out;
    for (const auto& m : members) {
        out += (out.empty() ? "" : "+") + m;
    }
    return out;
}

}  // namespace

std::string render_markdown(const RunReport& report) {
    std::ostringstream out;
    out << "# CA results\n\n";
    out << "Thresholds apply to the natural log of the pixel-wise MSE on the RGBA and binary channels.\n";
    if (report.failed_tasks > 0) {
        out << "\n" << report.failed_tasks << " task run(s) failed and count as unsolved.\n";
    }
    for (const auto& block : report.blocks) {
        out << "\n## Solve rate at log(loss) <= " << fixed(block.threshold, 1) << "\n\n";
        out << "| Model | Tasks | Mean log(loss) | Solve rate | Exact match |\n";
        out << "|---|---:|---:|---:|---:|\n";
        for (const auto& row : block.rows) {
            out << "| " << row.label << " | " << row.tasks << " | " << fixed(row.mean_log_loss, 2) << " | "
                << percent(row.solve_rate) << " | " << percent(row.exact_match_rate) << " |\n";
        }
    }
    out << "\n## Cost per task\n\n";
    out << "Power " << fixed(report.power_watts, 1) << " W at $" << fixed(report.price_per_kwh, 2) << "/kWh.\n\n";
    out << "| Model | Mean wall time (s) | Cost ($/task) |\n";
    out << "|---|---:|---:|\n";
    for (const auto& cost : report.costs) {
        out << "| " << cost.variant << " | " << fixed(cost.mean_wall_seconds, 2) << " | "
            << scientific(cost.cost_per_task) << " |\n";
    }
    return out.str();
}

std::string render_csv(const RunReport& report) {
    std::ostringstream out;
    out << "block,threshold,model,is_union,tasks,mean_log_loss,solve_rate,exact_match_rate,mean_wall_seconds,"
           "cost_per_task\n";
    for (const auto& block : report.blocks) {
        for (const auto& row : block.rows) {
            out << "solve," << fixed(block.threshold, 2) << "," << csv_label(row.members) << ","
                << (row.is_union ? 1 : 0) << "," << row.tasks << "," << fixed(row.mean_log_loss, 6) << ","
                << fixed(row.solve_rate, 6) << "," << fixed(row.exact_match_rate, 6) << ",,\n";
        }
    }
    for (const auto& cost : report.costs) {
        out << "cost,," << cost.variant << ",0,,,,," << fixed(cost.mean_wall_seconds, 6) << ","
            << scientific(cost.cost_per_task) << "\n";
    }
    return out.str();
}

}  // namespace arcnca
