#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "arcnca/attention.hpp"
#include "arcnca/lattice.hpp"
#include "arcnca/neighborhood.hpp"
#include "arcnca/parameters.hpp"

namespace arcnca {

using Rng = std::mt19937_64;

enum class Sensing { fixed, learnable };

constexpr int kPerceptionKernels = 4;

/// Identity, Sobel-x, Sobel-y and Laplacian, in tap order.
[[nodiscard]] const std::array<std::array<double, kWindow>, kPerceptionKernels>& fixed_stencils();

struct PerceptionSpec {
    Sensing mode = Sensing::fixed;
    Boundary boundary = Boundary::toroidal;
    int kernel_count = kPerceptionKernels;
};

/// Per-channel kernels [channel][kernel][tap] initialized to the fixed stencils.
[[nodiscard]] std::vector<double> stencil_kernels(int channels);

/// Depthwise cross-correlation of `channels` with per-channel kernels.
/// Feature column (c - channels.begin) * 4 + k holds kernel k on channel c.
[[nodiscard]] RowMatrix perceive(const Lattice& state, ChannelRange channels, const PerceptionSpec& spec,
                                 std::span<const double> kernels = {});

/// One per-cell update network together with what it senses and writes.
///
/// Features are [perception of `sensed` | attention over `sensed` | raw
/// `own` channels of the cell itself]; the network is
/// dense(hidden) -> ReLU -> dense(write.size()) without a final bias.
struct UpdateRuleSpec {
    std::string name;
    ChannelRange sensed;
    ChannelRange own;
    ChannelRange write;
    PerceptionSpec perception;
    bool attention = false;
    int hidden = 64;
    bool final_layer_zero_init = true;

    [[nodiscard]] int perception_width() const { return sensed.size() * kPerceptionKernels; }
    [[nodiscard]] int attention_width() const { return attention ? sensed.size() : 0; }
    [[nodiscard]] int feature_width() const { return perception_width() + attention_width() + own.size(); }
};

struct StepOptions {
    double fire_rate = 0.5;
    bool alive_masking = true;
    Boundary alive_boundary = Boundary::toroidal;
    double alive_threshold = 0.1;
};

using FireMask = std::vector<std::uint8_t>;

/// A stepper built from update rules applied in sequence inside one step,
/// followed by a shared alive mask.
class CellularModel {
public:
    CellularModel() = default;
    CellularModel(int channels, std::vector<UpdateRuleSpec> rules, StepOptions options);

    /// First layers uniform in +-1/sqrt(fan_in), final layers zero (or
    /// small random when final_layer_zero_init is off), sensing kernels at
    /// the stencils, attention keys and queries random.
    void initialize(std::uint64_t seed);

    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] const std::vector<UpdateRuleSpec>& rules() const { return rules_; }
    [[nodiscard]] const StepOptions& options() const { return options_; }
    [[nodiscard]] StepOptions& options() { return options_; }
    [[nodiscard]] ParameterSet& parameters() { return params_; }
    [[nodiscard]] const ParameterSet& parameters() const { return params_; }

    [[nodiscard]] FireMask sample_fire_mask(int cells, Rng& rng) const;

    [[nodiscard]] Lattice step(const Lattice& state, Rng& rng) const;
    [[nodiscard]] Lattice step(const Lattice& state, const FireMask& fire) const;

    /// Adds d(loss)/d(params) into `grads` and returns d(loss)/d(input),
    /// given d(loss)/d(output) of step(input, fire).
    [[nodiscard]] Lattice step_backward(const Lattice& input, const FireMask& fire, const Lattice& grad_output,
                                        ParameterSet& grads) const;

    /// Per-cell delta written by one rule on `state` before masking.
    [[nodiscard]] RowMatrix rule_delta(std::size_t rule, const Lattice& state) const;

    /// 1 where a cell or one of its 3x3 neighbors has alpha above the threshold.
    [[nodiscard]] std::vector<std::uint8_t> life_mask(const Lattice& state) const;

private:
    struct RuleParams {
        std::optional<std::size_t> sense;
        std::optional<std::size_t> attention;
        std::size_t w1 = 0;
        std::size_t b1 = 0;
        std::size_t w2 = 0;
    };
    struct RuleCache {
        RowMatrix features;
        RowMatrix hidden;
    };

    void validate() const;
    void features(std::size_t rule, const Lattice& state, const Neighborhood& hood, RowMatrix& out) const;
    void apply_rule(std::size_t rule, Lattice& state, const FireMask& fire, RuleCache* cache) const;
    [[nodiscard]] std::span<const double> kernels_for(std::size_t rule) const;

    int channels_ = 0;
    std::vector<UpdateRuleSpec> rules_;
    StepOptions options_;
    ParameterSet params_;
    std::vector<RuleParams> layout_;
    std::vector<std::vector<double>> fixed_kernels_;
};

/// Iterates `steps` stochastic steps. When `trajectory` is given it receives
/// steps + 1 lattices starting with the input.
[[nodiscard]] Lattice rollout(const CellularModel& model, const Lattice& state, int steps, Rng& rng,
                              std::vector<Lattice>* trajectory = nullptr);

/// Recorded forward rollout for backpropagation through time. Only the
/// per-step inputs and fire masks are kept; step internals are recomputed
/// during the backward sweep.
class RolloutTape {
public:
    [[nodiscard]] Lattice run(const CellularModel& model, const Lattice& state, int steps, Rng& rng);

    /// Accumulates parameter gradients for d(loss)/d(final state) and returns
    /// d(loss)/d(initial state).
    Lattice backward(const CellularModel& model, const Lattice& grad_final, ParameterSet& grads) const;

    [[nodiscard]] int steps() const { return static_cast<int>(inputs_.size()); }

private:
    std::vector<Lattice> inputs_;
    std::vector<FireMask> masks_;
};

}  // namespace arcnca
