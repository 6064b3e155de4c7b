#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arcnca/evaluator.hpp"

namespace arcnca {

inline constexpr const char* kToolkitVersion = "0.3.0";

/// Raised for invalid run configuration; the CLI maps it to a non-zero exit.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunManifest {
    std::uint64_t global_seed = 0;
    std::vector<std::string> variants = {"NCA", "v1", "v2", "v3", "v4"};
    std::filesystem::path dataset;
    PaddingMode padding = PaddingMode::ignore_resizing;
    /// In maximal-padding mode, also drop size-changing tasks.
    bool filter_padded = false;
    TrainConfig train;
    EvalConfig eval;
    VariantOptions variant_options;
    std::vector<double> thresholds = {-7.0, -6.0};
    int workers = 1;
    std::filesystem::path output = "runs/default";
    std::string toolkit_version = kToolkitVersion;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const RunManifest& manifest);
[[nodiscard]] RunManifest manifest_from_json(const nlohmann::json& j);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Sets the iteration budget and moves the LR drop to the same 2/3 point.
void set_iterations(TrainConfig& cfg, int iterations);

/// Tasks prepared for one variant under the manifest's padding policy,
/// sorted by task id.
[[nodiscard]] std::vector<TaskRecord> prepare_tasks(const std::vector<TaskRecord>& raw, const RunManifest& manifest,
                                                    const VariantSpec& variant);

/// Trains and scores every task for every variant. Existing per-task results
/// are kept unless `force` is set. Returns the process exit status.
int cmd_solve(const RunManifest& manifest, bool force, std::ostream& log);

/// Reads results under a run directory and writes report.md / report.csv.
/// Returns the Markdown text.
std::string cmd_report(const std::filesystem::path& run_dir, const std::vector<double>& thresholds,
                       const EvalConfig& cfg);

/// Rolls a checkpoint on a task's first test input (or train input) for
/// `steps` steps and exports the frames.
std::vector<std::filesystem::path> cmd_frames(const std::filesystem::path& checkpoint,
                                              const std::filesystem::path& task_path,
                                              const std::filesystem::path& out_dir, int steps, bool gif,
                                              int scale = 8, std::uint64_t seed = 0, bool use_train_input = false);

/// Summary counts for a dataset directory.
std::string cmd_dataset_stats(const std::filesystem::path& dataset);

/// Reads every result under run_dir/results, sorted by variant then task id.
[[nodiscard]] std::vector<TaskResult> read_results(const std::filesystem::path& run_dir);

}  // namespace arcnca
