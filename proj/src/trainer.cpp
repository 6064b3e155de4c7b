#include "arcnca/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "arcnca/codec.hpp"

namespace arcnca {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void check_loss_shapes(const Lattice& state, const Lattice& target, ChannelRange loss_channels) {
    if (state.height() != target.height() || state.width() != target.width()) {
        throw std::invalid_argument("loss: state and target differ in height or width");
    }
    if (loss_channels.empty() || !loss_channels.within({0, std::min(state.channels(), target.channels())})) {
        throw std::invalid_argument("loss: invalid loss channel range");
    }
}

bool patches_apply(const Lattice& state) {
    return state.height() >= 3 && state.width() >= 3;
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 0) {
        throw std::invalid_argument("iterations must be >= 0");
    }
    if (!(lr > 0.0) || !(lr_drop_factor > 0.0)) {
        throw std::invalid_argument("learning rate and drop factor must be positive");
    }
    if (rollout_min < 0 || rollout_max < rollout_min) {
        throw std::invalid_argument("rollout step range must satisfy 0 <= min <= max");
    }
    if (loss_channels.empty() || !loss_channels.within({0, kChannels})) {
        throw std::invalid_argument("loss channels must be a non-empty subset of 0..49");
    }
    if (patch_mix < 0.0 || patch_mix > 1.0 || patches_per_pair < 1) {
        throw std::invalid_argument("patch settings out of range");
    }
}

double TrainConfig::lr_at(int iteration) const {
    return iteration >= lr_drop_at ? lr * lr_drop_factor : lr;
}

double clamped_log(double mse) {
    constexpr double kFloor = -30.0;
    if (!(mse > 0.0)) {
        return kFloor;
    }
    return std::max(kFloor, std::log(mse));
}

double pixelwise_mse(const Lattice& state, const Lattice& target, ChannelRange loss_channels) {
    check_loss_shapes(state, target, loss_channels);
    double total = 0.0;
    for (int n = 0; n < state.cells(); ++n) {
        const auto a = state.cell(n);
        const auto b = target.cell(n);
        for (int c = loss_channels.begin; c < loss_channels.end; ++c) {
            const double d = a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)];
            total += d * d;
        }
    }
    return total / (static_cast<double>(state.cells()) * loss_channels.size());
}

Lattice pixelwise_mse_grad(const Lattice& state, const Lattice& target, ChannelRange loss_channels) {
    check_loss_shapes(state, target, loss_channels);
    Lattice grad(state.height(), state.width(), state.channels(), 0.0);
    const double scale = 2.0 / (static_cast<double>(state.cells()) * loss_channels.size());
    for (int n = 0; n < state.cells(); ++n) {
        const auto a = state.cell(n);
        const auto b = target.cell(n);
        auto g = grad.cell(n);
        for (int c = loss_channels.begin; c < loss_channels.end; ++c) {
            const auto k = static_cast<std::size_t>(c);
            g[k] = scale * (a[k] - b[k]);
        }
    }
    return grad;
}

PatchSet sample_patches(int height, int width, int count, Rng& rng) {
    PatchSet patches;
    if (height < 3 || width < 3) {
        return patches;
    }
    std::uniform_int_distribution<int> row(0, height - 3);
    std::uniform_int_distribution<int> col(0, width - 3);
    patches.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int r = row(rng);
        patches.emplace_back(r, col(rng));
    }
    return patches;
}

double patch_loss(const Lattice& state, const Lattice& target, const PatchSet& patches, ChannelRange loss_channels) {
    check_loss_shapes(state, target, loss_channels);
    if (!patches_apply(state) || patches.empty()) {
        return pixelwise_mse(state, target, loss_channels);
    }
    double total = 0.0;
    for (const auto& [r0, c0] : patches) {
        double sum = 0.0;
        for (int r = r0; r < r0 + 3; ++r) {
            for (int c = c0; c < c0 + 3; ++c) {
                for (int k = loss_channels.begin; k < loss_channels.end; ++k) {
                    const double d = state.at(r, c, k) - target.at(r, c, k);
                    sum += d * d;
                }
            }
        }
        total += sum / (9.0 * loss_channels.size());
    }
    return total / static_cast<double>(patches.size());
}

Lattice patch_loss_grad(const Lattice& state, const Lattice& target, const PatchSet& patches,
                        ChannelRange loss_channels) {
    check_loss_shapes(state, target, loss_channels);
    if (!patches_apply(state) || patches.empty()) {
        return pixelwise_mse_grad(state, target, loss_channels);
    }
    Lattice grad(state.height(), state.width(), state.channels(), 0.0);
    const double scale = 2.0 / (9.0 * loss_channels.size() * static_cast<double>(patches.size()));
    for (const auto& [r0, c0] : patches) {
        for (int r = r0; r < r0 + 3; ++r) {
            for (int c = c0; c < c0 + 3; ++c) {
                for (int k = loss_channels.begin; k < loss_channels.end; ++k) {
                    grad.at(r, c, k) += scale * (state.at(r, c, k) - target.at(r, c, k));
                }
            }
        }
    }
    return grad;
}

void normalize_gradients(ParameterSet& grads) {
    for (auto& array : grads) {
        double norm2 = 0.0;
        for (const double g : array.values) {
            norm2 += g * g;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& g : array.values) {
                g *= inv;
            }
        }
    }
}

AdamW::AdamW(const ParameterSet& params, double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay), m_(params.zeros_like()),
      v_(params.zeros_like()) {}

void AdamW::step(ParameterSet& params, const ParameterSet& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t a = 0; a < params.count(); ++a) {
        auto& p = params[a].values;
        const auto& g = grads[a].values;
        auto& m = m_[a].values;
        auto& v = v_[a].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] -= lr * weight_decay_ * p[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

std::uint64_t task_seed(std::uint64_t global_seed, const std::string& task_id) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const unsigned char ch : task_id) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(global_seed ^ splitmix64(h));
}

double evaluate_train_loss(const CellularModel& model, const TaskRecord& task, ChannelRange loss_channels, int steps,
                           Rng& rng) {
    const Palette palette = palette_for(task.padded);
    double total = 0.0;
    for (const auto& pair : task.train_pairs) {
        const Lattice final_state = rollout(model, encode_grid(pair.input, palette), steps, rng);
        total += pixelwise_mse(final_state, encode_grid(pair.output, palette), loss_channels);
    }
    return total / static_cast<double>(task.train_pairs.size());
}

TrainedModel train_task(const TaskRecord& task, const VariantSpec& variant, const TrainConfig& cfg,
                        const VariantOptions& options, const TrainObserver& observer) {
    cfg.validate();
    if (task.train_pairs.empty()) {
        throw TrainingError(task.task_id + ": task has no train pairs");
    }
    if (task.size_changing) {
        throw TrainingError(task.task_id + ": size-changing task needs padding before training");
    }
    using Clock = std::chrono::steady_clock;
    const auto started = Clock::now();

    TrainedModel trained{build_variant(variant, cfg.seed, options), cfg.seed, cfg.iterations, {}, 0.0, 0.0};
    CellularModel& model = trained.variant.model;
    Rng rng(splitmix64(cfg.seed + 1));

    const Palette palette = palette_for(task.padded);
    std::vector<Lattice> inputs;
    std::vector<Lattice> targets;
    for (const auto& pair : task.train_pairs) {
        inputs.push_back(encode_grid(pair.input, palette));
        targets.push_back(encode_grid(pair.output, palette));
    }

    AdamW optimizer(model.parameters(), cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
    ParameterSet grads = model.parameters().zeros_like();
    std::uniform_int_distribution<int> rollout_steps(cfg.rollout_min, cfg.rollout_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RolloutTape tape;
    trained.train_log.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int it = 0; it < cfg.iterations; ++it) {
        const auto iter_start = Clock::now();
        grads.fill(0.0);
        const int steps = rollout_steps(rng);
        const bool use_patches = variant.patch_training && unit(rng) < cfg.patch_mix;
        double loss = 0.0;
        for (std::size_t p = 0; p < inputs.size(); ++p) {
            const Lattice final_state = tape.run(model, inputs[p], steps, rng);
            Lattice grad;
            if (use_patches) {
                const auto patches =
                    sample_patches(final_state.height(), final_state.width(), cfg.patches_per_pair, rng);
                loss += patch_loss(final_state, targets[p], patches, cfg.loss_channels);
                grad = patch_loss_grad(final_state, targets[p], patches, cfg.loss_channels);
            } else {
                loss += pixelwise_mse(final_state, targets[p], cfg.loss_channels);
                grad = pixelwise_mse_grad(final_state, targets[p], cfg.loss_channels);
            }
            tape.backward(model, grad, grads);
        }
        loss /= static_cast<double>(inputs.size());
        if (!std::isfinite(loss)) {
            throw TrainingError(task.task_id + ": non-finite loss at iteration " + std::to_string(it));
        }
        normalize_gradients(grads);
        const double lr = cfg.lr_at(it);
        optimizer.step(model.parameters(), grads, lr);

        TrainLogEntry entry{it, loss, clamped_log(loss), lr,
                            std::chrono::duration<double, std::milli>(Clock::now() - iter_start).count()};
        trained.train_log.push_back(entry);
        if (observer) {
            observer(entry);
        }
    }

    trained.final_train_loss = evaluate_train_loss(model, task, cfg.loss_channels, cfg.rollout_max, rng);
    trained.wall_time_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return trained;
}

}  // namespace arcnca
