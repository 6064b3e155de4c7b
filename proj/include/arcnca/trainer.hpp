#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arcnca/dataset.hpp"
#include "arcnca/engram.hpp"

namespace arcnca {

struct TrainConfig {
    int iterations = 3000;
    double lr = 1e-3;
    int lr_drop_at = 2000;
    double lr_drop_factor = 0.34;
    int rollout_min = 64;
    int rollout_max = 96;
    ChannelRange loss_channels{0, kVisibleChannels};
    std::uint64_t seed = 0;
    double patch_mix = 0.5;
    int patches_per_pair = 16;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 1e-2;
    double adam_eps = 1e-8;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
    /// Learning rate in effect at a 0-based iteration.
    [[nodiscard]] double lr_at(int iteration) const;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainLogEntry {
    int iteration = 0;
    double loss = 0.0;
    double log_loss = 0.0;
    double lr = 0.0;
    double wall_ms = 0.0;
};

struct TrainedModel {
    Variant variant;
    std::uint64_t seed = 0;
    int iterations = 0;
    std::vector<TrainLogEntry> train_log;
    /// Mean pixelwise MSE over train pairs from a fresh rollout at the
    /// final parameters.
    double final_train_loss = 0.0;
    double wall_time_seconds = 0.0;
};

/// Natural log with a floor of -30 for perfect states.
[[nodiscard]] double clamped_log(double mse);

/// Mean squared error over all cells and the given channels.
[[nodiscard]] double pixelwise_mse(const Lattice& state, const Lattice& target, ChannelRange loss_channels);

/// Gradient of pixelwise_mse with respect to `state`.
[[nodiscard]] Lattice pixelwise_mse_grad(const Lattice& state, const Lattice& target, ChannelRange loss_channels);

/// Top-left corners of 3x3 patches.
using PatchSet = std::vector<std::pair<int, int>>;

[[nodiscard]] PatchSet sample_patches(int height, int width, int count, Rng& rng);

/// Mean over patches of the MSE restricted to each 3x3 patch. Grids smaller
/// than 3x3 fall back to the full-grid loss.
[[nodiscard]] double patch_loss(const Lattice& state, const Lattice& target, const PatchSet& patches,
                                ChannelRange loss_channels);

[[nodiscard]] Lattice patch_loss_grad(const Lattice& state, const Lattice& target, const PatchSet& patches,
                                      ChannelRange loss_channels);

/// Scales each array to unit L2 norm; all-zero arrays stay zero.
void normalize_gradients(ParameterSet& grads);

/// Decoupled-weight-decay Adam.
class AdamW {
public:
    AdamW(const ParameterSet& params, double beta1, double beta2, double eps, double weight_decay);

    void step(ParameterSet& params, const ParameterSet& grads, double lr);
    [[nodiscard]] long long steps_taken() const { return t_; }

private:
    double beta1_;
    double beta2_;
    double eps_;
    double weight_decay_;
    long long t_ = 0;
    ParameterSet m_;
    ParameterSet v_;
};

/// Stable per-task seed derived from a global seed and the task id.
[[nodiscard]] std::uint64_t task_seed(std::uint64_t global_seed, const std::string& task_id);

using TrainObserver = std::function<void(const TrainLogEntry&)>;

/// Trains a fresh model for the variant on every train pair of the task.
[[nodiscard]] TrainedModel train_task(const TaskRecord& task, const VariantSpec& variant, const TrainConfig& cfg,
                                      const VariantOptions& options = {}, const TrainObserver& observer = {});

/// Mean train-pair MSE of a fresh rollout of `steps` steps.
[[nodiscard]] double evaluate_train_loss(const CellularModel& model, const TaskRecord& task, ChannelRange loss_channels,
                                         int steps, Rng& rng);

}  // namespace arcnca
