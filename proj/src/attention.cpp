#include "arcnca/attention.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace arcnca {

namespace {

struct CellChannelAttention {
    std::array<double, kWindow> weight{};
    std::array<double, kWindow> value{};
    std::array<double, kWindow> key{};
    std::array<int, kWindow> source{};
    double query = 0.0;
    double output = 0.0;
};

void check_params(ChannelRange channels, std::span<const double> params) {
    if (params.size() != static_cast<std::size_t>(channels.size()) * AttentionLayout::kPerChannel) {
        throw std::invalid_argument("attention parameter size mismatch");
    }
}

CellChannelAttention evaluate(const Lattice& state, const Neighborhood& hood, std::span<const double> p, int cell,
                              int ch) {
    CellChannelAttention a;
    const int C = state.channels();
    const double* x = state.data();
    a.query = p[AttentionLayout::kQueryWeight] * x[cell * C + ch] + p[AttentionLayout::kQueryBias];
    double best = -std::numeric_limits<double>::infinity();
    std::array<double, kWindow> score{};
    for (int t = 0; t < kWindow; ++t) {
        const int m = hood.tap(cell, t);
        a.source[t] = m;
        if (m < 0) {
            continue;
        }
        a.value[t] = x[m * C + ch];
        a.key[t] = p[AttentionLayout::kKeyWeight] * a.value[t] + p[AttentionLayout::kKeyBias];
        score[t] = a.query * a.key[t] + p[AttentionLayout::kTapBias + t];
        best = std::max(best, score[t]);
    }
    double total = 0.0;
    for (int t = 0; t < kWindow; ++t) {
        if (a.source[t] < 0) {
            continue;
        }
        a.weight[t] = std::exp(score[t] - best);
        total += a.weight[t];
    }
    for (int t = 0; t < kWindow; ++t) {
        a.weight[t] /= total;
        a.output += a.weight[t] * a.value[t];
    }
    return a;
}

}  // namespace

void attention_forward(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                       std::span<const double> params, RowMatrix& features, int column) {
    check_params(channels, params);
    for (int n = 0; n < state.cells(); ++n) {
        for (int i = 0; i < channels.size(); ++i) {
            const auto p = params.subspan(static_cast<std::size_t>(i) * AttentionLayout::kPerChannel,
                                          AttentionLayout::kPerChannel);
            features(n, column + i) = evaluate(state, hood, p, n, channels.begin + i).output;
        }
    }
}

void attention_backward(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                        std::span<const double> params, const RowMatrix& grad_features, int column,
                        Lattice& grad_state, std::span<double> grad_params) {
    check_params(channels, params);
    const int C = state.channels();
    double* gx = grad_state.data();
    for (int n = 0; n < state.cells(); ++n) {
        for (int i = 0; i < channels.size(); ++i) {
            const double g = grad_features(n, column + i);
            if (g == 0.0) {
                continue;
            }
            const int ch = channels.begin + i;
            const auto offset = static_cast<std::size_t>(i) * AttentionLayout::kPerChannel;
            const auto p = params.subspan(offset, AttentionLayout::kPerChannel);
            auto gp = grad_params.subspan(offset, AttentionLayout::kPerChannel);
            const auto a = evaluate(state, hood, p, n, ch);

            double mean_da = 0.0;
            for (int t = 0; t < kWindow; ++t) {
                if (a.source[t] >= 0) {
                    mean_da += a.weight[t] * g * a.value[t];
                }
            }
            double d_query = 0.0;
            const double wk = p[AttentionLayout::kKeyWeight];
            for (int t = 0; t < kWindow; ++t) {
                const int m = a.source[t];
                if (m < 0) {
                    continue;
                }
                const double ds = a.weight[t] * (g * a.value[t] - mean_da);
                gp[AttentionLayout::kTapBias + t] += ds;
                d_query += ds * a.key[t];
                const double d_key = ds * a.query;
                gp[AttentionLayout::kKeyWeight] += d_key * a.value[t];
                gp[AttentionLayout::kKeyBias] += d_key;
                gx[m * C + ch] += a.weight[t] * g + d_key * wk;
            }
            gp[AttentionLayout::kQueryWeight] += d_query * state.data()[n * C + ch];
            gp[AttentionLayout::kQueryBias] += d_query;
            gx[n * C + ch] += d_query * p[AttentionLayout::kQueryWeight];
        }
    }
}

RowMatrix local_channel_attention(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                                  std::span<const double> params) {
    RowMatrix out(state.cells(), channels.size());
    attention_forward(state, channels, hood, params, out, 0);
    return out;
}

std::vector<double> attention_weights(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                                      std::span<const double> params) {
    check_params(channels, params);
    std::vector<double> out(static_cast<std::size_t>(state.cells()) * channels.size() * kWindow, 0.0);
    for (int n = 0; n < state.cells(); ++n) {
        for (int i = 0; i < channels.size(); ++i) {
            const auto p = params.subspan(static_cast<std::size_t>(i) * AttentionLayout::kPerChannel,
                                          AttentionLayout::kPerChannel);
            const auto a = evaluate(state, hood, p, n, channels.begin + i);
            std::copy(a.weight.begin(), a.weight.end(),
                      out.begin() + (static_cast<std::ptrdiff_t>(n) * channels.size() + i) * kWindow);
        }
    }
    return out;
}

}  // namespace arcnca
