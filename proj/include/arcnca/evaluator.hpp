#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arcnca/codec.hpp"
#include "arcnca/trainer.hpp"

namespace arcnca {

constexpr int kResultSchemaVersion = 1;

struct EvalConfig {
    double threshold_strict = -7.0;
    double threshold_loose = -6.0;
    int max_eval_steps = 150;
    int stability_window = 10;
    double stability_epsilon = 1e-3;
    ChannelRange stability_channels{0, kVisibleChannels};
    ChannelRange loss_channels{0, kVisibleChannels};
    double power_watts = 200.0;
    double price_per_kwh = 0.37;

    void validate() const;
};

struct TaskResult {
    std::string task_id;
    std::string variant;
    std::string status = "ok";
    std::string error;
    double log_loss = 0.0;
    bool solved_strict = false;
    bool solved_loose = false;
    bool exact_match = false;
    int steps_to_stable = 0;
    /// Largest per-pixel squared error over the loss channels.
    double max_pixel_sq_error = 0.0;
    /// Lowest log loss seen at any step of the evaluation rollout.
    double best_step_log_loss = 0.0;
    double train_log_loss = 0.0;
    double wall_time_seconds = 0.0;

    [[nodiscard]] bool ok() const { return status == "ok"; }
};

[[nodiscard]] nlohmann::json to_json(const TaskResult& result);
[[nodiscard]] TaskResult task_result_from_json(const nlohmann::json& j);

struct StableRollout {
    Lattice state;
    int steps = 0;
    bool stable = false;
    /// Per-step log loss against `target` when one was supplied.
    std::vector<double> step_log_loss;
};

/// Steps until the largest per-step change on the stability channels stays
/// below epsilon for `stability_window` consecutive steps, or until the cap.
[[nodiscard]] StableRollout rollout_to_stable(const CellularModel& model, const Lattice& start, const EvalConfig& cfg,
                                              Rng& rng, const Lattice* target = nullptr);

struct StateScore {
    double mse = 0.0;
    double log_loss = 0.0;
    double max_pixel_sq_error = 0.0;
    bool exact_match = false;
};

/// Scores a final state against a target grid.
[[nodiscard]] StateScore score_state(const Lattice& state, const Grid& target, const Palette& palette,
                                     const EvalConfig& cfg);

/// Rolls the model on every test input and scores the task. The task's
/// MSE is the mean over test pairs and exact_match requires every pair.
[[nodiscard]] TaskResult score_task(const TrainedModel& model, const TaskRecord& task, const EvalConfig& cfg, Rng& rng);

using ResultsByVariant = std::map<std::string, std::vector<TaskResult>>;

/// Fraction of tasks solved (log_loss <= threshold) by at least one member.
/// Throws std::invalid_argument when members cover different task sets.
[[nodiscard]] double union_solve(const ResultsByVariant& results, const std::vector<std::string>& members,
                                 double threshold);

[[nodiscard]] double cost_per_task(double mean_wall_seconds, double power_watts, double price_per_kwh);

struct ReportRow {
    std::string label;
    std::vector<std::string> members;
    bool is_union = false;
    std::size_t tasks = 0;
    double mean_log_loss = 0.0;
    double solve_rate = 0.0;
    double exact_match_rate = 0.0;
};

struct ThresholdBlock {
    double threshold = 0.0;
    std::vector<ReportRow> rows;
};

struct VariantCost {
    std::string variant;
    double mean_wall_seconds = 0.0;
    double cost_per_task = 0.0;
};

struct RunReport {
    std::vector<ThresholdBlock> blocks;
    std::vector<VariantCost> costs;
    std::size_t failed_tasks = 0;
    double power_watts = 0.0;
    double price_per_kwh = 0.0;
};

/// Per-variant rows plus every pairwise union, NCA+v1+v3+v4 when all four
/// are present, and with three or more variants the union of all of them;
/// one block per threshold.
[[nodiscard]] RunReport summarize(const std::vector<TaskResult>& results, const std::vector<double>& thresholds,
                                  const EvalConfig& cfg);

[[nodiscard]] std::string render_markdown(const RunReport& report);
[[nodiscard]] std::string render_csv(const RunReport& report);

/// Writes frame_%05d.png per lattice (and rollout.gif when asked); returns
/// the PNG paths.
std::vector<std::filesystem::path> export_frames(const std::vector<Lattice>& trajectory,
                                                 const std::filesystem::path& directory, int scale = 8,
                                                 bool gif = false);

}  // namespace arcnca
