#include "arcnca/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arcnca {

const std::array<std::array<double, kWindow>, kPerceptionKernels>& fixed_stencils() {
    static const std::array<std::array<double, kWindow>, kPerceptionKernels> stencils = {{
        {0, 0, 0, 0, 1, 0, 0, 0, 0},
        {-1.0 / 8, 0, 1.0 / 8, -2.0 / 8, 0, 2.0 / 8, -1.0 / 8, 0, 1.0 / 8},
        {-1.0 / 8, -2.0 / 8, -1.0 / 8, 0, 0, 0, 1.0 / 8, 2.0 / 8, 1.0 / 8},
        {1.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, -12.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, 1.0 / 16},
    }};
    return stencils;
}

std::vector<double> stencil_kernels(int channels) {
    std::vector<double> kernels;
    kernels.reserve(static_cast<std::size_t>(channels) * kPerceptionKernels * kWindow);
    for (int c = 0; c < channels; ++c) {
        for (const auto& stencil : fixed_stencils()) {
            kernels.insert(kernels.end(), stencil.begin(), stencil.end());
        }
    }
    return kernels;
}

namespace {

void perceive_into(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                   std::span<const double> kernels, RowMatrix& out) {
    const int C = state.channels();
    const int S = channels.size();
    const double* x = state.data();
    for (int n = 0; n < state.cells(); ++n) {
        double* row = out.row(n).data();
        std::fill(row, row + static_cast<std::ptrdiff_t>(S) * kPerceptionKernels, 0.0);
        for (int t = 0; t < kWindow; ++t) {
            const int m = hood.tap(n, t);
            if (m < 0) {
                continue;
            }
            const double* src = x + static_cast<std::ptrdiff_t>(m) * C + channels.begin;
            for (int i = 0; i < S; ++i) {
                const double v = src[i];
                const double* k = kernels.data() + (static_cast<std::ptrdiff_t>(i) * kPerceptionKernels) * kWindow + t;
                double* f = row + static_cast<std::ptrdiff_t>(i) * kPerceptionKernels;
                f[0] += k[0] * v;
                f[1] += k[kWindow] * v;
                f[2] += k[2 * kWindow] * v;
                f[3] += k[3 * kWindow] * v;
            }
        }
    }
}

void check_channels(const Lattice& state, ChannelRange channels) {
    if (!channels.within({0, state.channels()})) {
        throw std::invalid_argument("channel range outside lattice");
    }
}

}  // namespace

RowMatrix perceive(const Lattice& state, ChannelRange channels, const PerceptionSpec& spec,
                   std::span<const double> kernels) {
    check_channels(state, channels);
    if (spec.kernel_count != kPerceptionKernels) {
        throw std::invalid_argument("perception uses exactly 4 kernels");
    }
    std::vector<double> fixed;
    if (spec.mode == Sensing::fixed || kernels.empty()) {
        fixed = stencil_kernels(channels.size());
        kernels = fixed;
    }
    if (kernels.size() != static_cast<std::size_t>(channels.size()) * kPerceptionKernels * kWindow) {
        throw std::invalid_argument("kernel array shape mismatch");
    }
    RowMatrix out(state.cells(), channels.size() * kPerceptionKernels);
    perceive_into(state, channels, Neighborhood(state.height(), state.width(), spec.boundary), kernels, out);
    return out;
}

CellularModel::CellularModel(int channels, std::vector<UpdateRuleSpec> rules, StepOptions options)
    : channels_(channels), rules_(std::move(rules)), options_(options) {
    validate();
    for (const auto& rule : rules_) {
        RuleParams p;
        const auto S = static_cast<std::size_t>(rule.sensed.size());
        if (rule.perception.mode == Sensing::learnable) {
            p.sense = params_.add(rule.name + ".sense", S * kPerceptionKernels * kWindow);
        }
        if (rule.attention) {
            p.attention = params_.add(rule.name + ".attention", S * AttentionLayout::kPerChannel);
        }
        const auto F = static_cast<std::size_t>(rule.feature_width());
        const auto H = static_cast<std::size_t>(rule.hidden);
        p.w1 = params_.add(rule.name + ".w1", H * F);
        p.b1 = params_.add(rule.name + ".b1", H);
        p.w2 = params_.add(rule.name + ".w2", static_cast<std::size_t>(rule.write.size()) * H);
        layout_.push_back(p);
        fixed_kernels_.push_back(stencil_kernels(rule.sensed.size()));
    }
}

void CellularModel::validate() const {
    if (channels_ < kRgbaChannels) {
        throw std::invalid_argument("model needs at least 4 channels");
    }
    if (rules_.empty()) {
        throw std::invalid_argument("model needs at least one update rule");
    }
    const ChannelRange all{0, channels_};
    for (const auto& rule : rules_) {
        if (rule.sensed.empty() || !rule.sensed.within(all) || !rule.own.within(all) || rule.write.empty() ||
            !rule.write.within(all)) {
            throw std::invalid_argument("rule " + rule.name + ": channel ranges outside the lattice");
        }
        if (rule.hidden <= 0) {
            throw std::invalid_argument("rule " + rule.name + ": hidden width must be positive");
        }
        if (rule.perception.kernel_count != kPerceptionKernels) {
            throw std::invalid_argument("rule " + rule.name + ": perception uses exactly 4 kernels");
        }
    }
    if (!(options_.fire_rate > 0.0 && options_.fire_rate <= 1.0)) {
        throw std::invalid_argument("fire rate must lie in (0, 1]");
    }
}

void CellularModel::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        const auto& rule = rules_[r];
        const auto& p = layout_[r];
        if (p.sense) {
            params_[*p.sense].values = stencil_kernels(rule.sensed.size());
        }
        if (p.attention) {
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            auto& a = params_[*p.attention].values;
            std::fill(a.begin(), a.end(), 0.0);
            for (int i = 0; i < rule.sensed.size(); ++i) {
                auto* ch = a.data() + static_cast<std::ptrdiff_t>(i) * AttentionLayout::kPerChannel;
                ch[AttentionLayout::kQueryWeight] = unit(rng);
                ch[AttentionLayout::kKeyWeight] = unit(rng);
            }
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(rule.feature_width()));
        std::uniform_real_distribution<double> first(-bound, bound);
        for (auto& w : params_[p.w1].values) {
            w = first(rng);
        }
        for (auto& b : params_[p.b1].values) {
            b = first(rng);
        }
        const double out_bound = rule.final_layer_zero_init ? 0.0 : 1.0 / std::sqrt(static_cast<double>(rule.hidden));
        std::uniform_real_distribution<double> last(-out_bound, out_bound);
        for (auto& w : params_[p.w2].values) {
            w = rule.final_layer_zero_init ? 0.0 : last(rng);
        }
    }
}

FireMask CellularModel::sample_fire_mask(int cells, Rng& rng) const {
    FireMask mask(static_cast<std::size_t>(cells), 1);
    if (options_.fire_rate >= 1.0) {
        return mask;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& m : mask) {
        m = unit(rng) < options_.fire_rate ? 1 : 0;
    }
    return mask;
}

std::span<const double> CellularModel::kernels_for(std::size_t rule) const {
    const auto& p = layout_[rule];
    if (p.sense) {
        return params_[*p.sense].values;
    }
    return fixed_kernels_[rule];
}

void CellularModel::features(std::size_t rule, const Lattice& state, const Neighborhood& hood, RowMatrix& out) const {
    const auto& spec = rules_[rule];
    out.resize(state.cells(), spec.feature_width());
    perceive_into(state, spec.sensed, hood, kernels_for(rule), out);
    if (spec.attention) {
        attention_forward(state, spec.sensed, hood, params_[*layout_[rule].attention].values, out,
                          spec.perception_width());
    }
    if (!spec.own.empty()) {
        const int column = spec.perception_width() + spec.attention_width();
        for (int n = 0; n < state.cells(); ++n) {
            const auto cell = state.cell(n);
            for (int j = 0; j < spec.own.size(); ++j) {
                out(n, column + j) = cell[static_cast<std::size_t>(spec.own.begin + j)];
            }
        }
    }
}

void CellularModel::apply_rule(std::size_t rule, Lattice& state, const FireMask& fire, RuleCache* cache) const {
    const auto& spec = rules_[rule];
    const auto& p = layout_[rule];
    const Neighborhood hood(state.height(), state.width(), spec.perception.boundary);
    RowMatrix local_features;
    RowMatrix local_hidden;
    RowMatrix& feats = cache != nullptr ? cache->features : local_features;
    RowMatrix& hidden = cache != nullptr ? cache->hidden : local_hidden;

    features(rule, state, hood, feats);
    // Owned copies: Eigen's kernels peel by address alignment, so products
    // over unaligned std::vector storage can change summation order between
    // allocations and break run-to-run determinism.
    const RowMatrix w1 = Eigen::Map<const RowMatrix>(params_[p.w1].values.data(), spec.hidden, spec.feature_width());
    const Eigen::RowVectorXd b1 = Eigen::Map<const Eigen::RowVectorXd>(params_[p.b1].values.data(), spec.hidden);
    const RowMatrix w2 = Eigen::Map<const RowMatrix>(params_[p.w2].values.data(), spec.write.size(), spec.hidden);
    hidden.noalias() = feats * w1.transpose();
    hidden.rowwise() += b1;
    const RowMatrix delta = hidden.cwiseMax(0.0) * w2.transpose();
    for (int n = 0; n < state.cells(); ++n) {
        if (fire[static_cast<std::size_t>(n)] == 0) {
            continue;
        }
        auto cell = state.cell(n);
        for (int o = 0; o < spec.write.size(); ++o) {
            cell[static_cast<std::size_t>(spec.write.begin + o)] += delta(n, o);
        }
    }
}

RowMatrix CellularModel::rule_delta(std::size_t rule, const Lattice& state) const {
    Lattice after = state;
    apply_rule(rule, after, FireMask(static_cast<std::size_t>(state.cells()), 1), nullptr);
    const auto& spec = rules_.at(rule);
    RowMatrix delta(state.cells(), spec.write.size());
    for (int n = 0; n < state.cells(); ++n) {
        for (int o = 0; o < spec.write.size(); ++o) {
            const auto ch = static_cast<std::size_t>(spec.write.begin + o);
            delta(n, o) = after.cell(n)[ch] - state.cell(n)[ch];
        }
    }
    return delta;
}

std::vector<std::uint8_t> CellularModel::life_mask(const Lattice& state) const {
    const Neighborhood hood(state.height(), state.width(), options_.alive_boundary);
    std::vector<std::uint8_t> alive(static_cast<std::size_t>(state.cells()), 0);
    for (int n = 0; n < state.cells(); ++n) {
        for (int t = 0; t < kWindow; ++t) {
            const int m = hood.tap(n, t);
            if (m >= 0 && state.cell(m)[kAlphaChannel] > options_.alive_threshold) {
                alive[static_cast<std::size_t>(n)] = 1;
                break;
            }
        }
    }
    return alive;
}

Lattice CellularModel::step(const Lattice& state, Rng& rng) const {
    return step(state, sample_fire_mask(state.cells(), rng));
}

Lattice CellularModel::step(const Lattice& state, const FireMask& fire) const {
    if (state.channels() != channels_) {
        throw std::invalid_argument("lattice channel count does not match the model");
    }
    if (fire.size() != static_cast<std::size_t>(state.cells())) {
        throw std::invalid_argument("fire mask size mismatch");
    }
    Lattice next = state;
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        apply_rule(r, next, fire, nullptr);
    }
    if (options_.alive_masking) {
        const auto pre = life_mask(state);
        const auto post = life_mask(next);
        for (int n = 0; n < next.cells(); ++n) {
            if (pre[static_cast<std::size_t>(n)] == 0 || post[static_cast<std::size_t>(n)] == 0) {
                auto cell = next.cell(n);
                std::fill(cell.begin(), cell.end(), 0.0);
            }
        }
    }
    return next;
}

Lattice CellularModel::step_backward(const Lattice& input, const FireMask& fire, const Lattice& grad_output,
                                     ParameterSet& grads) const {
    if (!grad_output.same_shape(input)) {
        throw std::invalid_argument("gradient shape mismatch");
    }
    // Recompute the forward pass, keeping per-rule inputs and activations.
    std::vector<Lattice> states;
    states.reserve(rules_.size() + 1);
    states.push_back(input);
    std::vector<RuleCache> caches(rules_.size());
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        Lattice next = states.back();
        apply_rule(r, next, fire, &caches[r]);
        states.push_back(std::move(next));
    }

    Lattice grad = grad_output;
    if (options_.alive_masking) {
        const auto pre = life_mask(input);
        const auto post = life_mask(states.back());
        for (int n = 0; n < grad.cells(); ++n) {
            if (pre[static_cast<std::size_t>(n)] == 0 || post[static_cast<std::size_t>(n)] == 0) {
                auto cell = grad.cell(n);
                std::fill(cell.begin(), cell.end(), 0.0);
            }
        }
    }

    const int N = input.cells();
    for (std::size_t r = rules_.size(); r-- > 0;) {
        const auto& spec = rules_[r];
        const auto& p = layout_[r];
        const auto& cache = caches[r];
        const Lattice& x = states[r];
        const int O = spec.write.size();

        RowMatrix d_delta(N, O);
        for (int n = 0; n < N; ++n) {
            const bool fired = fire[static_cast<std::size_t>(n)] != 0;
            const auto g = grad.cell(n);
            for (int o = 0; o < O; ++o) {
                d_delta(n, o) = fired ? g[static_cast<std::size_t>(spec.write.begin + o)] : 0.0;
            }
        }
        if (d_delta.isZero(0.0)) {
            continue;
        }

        // Products run on owned (aligned) matrices; see apply_rule.
        const RowMatrix w1 = Eigen::Map<const RowMatrix>(params_[p.w1].values.data(), spec.hidden, spec.feature_width());
        const RowMatrix w2 = Eigen::Map<const RowMatrix>(params_[p.w2].values.data(), O, spec.hidden);
        Eigen::Map<RowMatrix> g_w1(grads[p.w1].values.data(), spec.hidden, spec.feature_width());
        Eigen::Map<Eigen::RowVectorXd> g_b1(grads[p.b1].values.data(), spec.hidden);
        Eigen::Map<RowMatrix> g_w2(grads[p.w2].values.data(), O, spec.hidden);

        const RowMatrix activ = cache.hidden.cwiseMax(0.0);
        const RowMatrix d_w2 = d_delta.transpose() * activ;
        g_w2 += d_w2;
        RowMatrix d_hidden = d_delta * w2;
        d_hidden = (cache.hidden.array() > 0.0).select(d_hidden, 0.0);
        const RowMatrix d_w1 = d_hidden.transpose() * cache.features;
        g_w1 += d_w1;
        const Eigen::RowVectorXd d_b1 = d_hidden.colwise().sum();
        g_b1 += d_b1;
        const RowMatrix d_feats = d_hidden * w1;

        // Feature backward into the rule's input state.
        const Neighborhood hood(x.height(), x.width(), spec.perception.boundary);
        const auto kernels = kernels_for(r);
        double* g_kernels = p.sense ? grads[*p.sense].values.data() : nullptr;
        const int C = x.channels();
        const int S = spec.sensed.size();
        double* gx = grad.data();
        const double* xv = x.data();
        for (int n = 0; n < N; ++n) {
            const double* df = d_feats.row(n).data();
            for (int t = 0; t < kWindow; ++t) {
                const int m = hood.tap(n, t);
                if (m < 0) {
                    continue;
                }
                const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(m) * C + spec.sensed.begin;
                for (int i = 0; i < S; ++i) {
                    const double* k = kernels.data() + (static_cast<std::ptrdiff_t>(i) * kPerceptionKernels) * kWindow + t;
                    const double* g = df + static_cast<std::ptrdiff_t>(i) * kPerceptionKernels;
                    gx[base + i] += k[0] * g[0] + k[kWindow] * g[1] + k[2 * kWindow] * g[2] + k[3 * kWindow] * g[3];
                    if (g_kernels != nullptr) {
                        double* gk = g_kernels + (static_cast<std::ptrdiff_t>(i) * kPerceptionKernels) * kWindow + t;
                        const double v = xv[base + i];
                        gk[0] += v * g[0];
                        gk[kWindow] += v * g[1];
                        gk[2 * kWindow] += v * g[2];
                        gk[3 * kWindow] += v * g[3];
                    }
                }
            }
        }
        if (spec.attention) {
            attention_backward(x, spec.sensed, hood, params_[*p.attention].values, d_feats, spec.perception_width(),
                               grad, grads[*p.attention].values);
        }
        if (!spec.own.empty()) {
            const int column = spec.perception_width() + spec.attention_width();
            for (int n = 0; n < N; ++n) {
                auto g = grad.cell(n);
                for (int j = 0; j < spec.own.size(); ++j) {
                    g[static_cast<std::size_t>(spec.own.begin + j)] += d_feats(n, column + j);
                }
            }
        }
    }
    return grad;
}

Lattice rollout(const CellularModel& model, const Lattice& state, int steps, Rng& rng, std::vector<Lattice>* trajectory) {
    if (steps < 0) {
        throw std::invalid_argument("negative step count");
    }
    Lattice x = state;
    if (trajectory != nullptr) {
        trajectory->clear();
        trajectory->reserve(static_cast<std::size_t>(steps) + 1);
        trajectory->push_back(x);
    }
    for (int s = 0; s < steps; ++s) {
        x = model.step(x, rng);
        if (trajectory != nullptr) {
            trajectory->push_back(x);
        }
    }
    return x;
}

Lattice RolloutTape::run(const CellularModel& model, const Lattice& state, int steps, Rng& rng) {
    if (steps < 0) {
        throw std::invalid_argument("negative step count");
    }
    inputs_.clear();
    masks_.clear();
    inputs_.reserve(static_cast<std::size_t>(steps));
    masks_.reserve(static_cast<std::size_t>(steps));
    Lattice x = state;
    for (int s = 0; s < steps; ++s) {
        masks_.push_back(model.sample_fire_mask(x.cells(), rng));
        inputs_.push_back(x);
        x = model.step(x, masks_.back());
    }
    return x;
}

Lattice RolloutTape::backward(const CellularModel& model, const Lattice& grad_final, ParameterSet& grads) const {
    Lattice grad = grad_final;
    for (std::size_t s = inputs_.size(); s-- > 0;) {
        grad = model.step_backward(inputs_[s], masks_[s], grad, grads);
    }
    return grad;
}

}  // namespace arcnca
