#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "arcnca/lattice.hpp"
#include "arcnca/neighborhood.hpp"

namespace arcnca {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Channel-wise local self-attention over the 3x3 window.
//
// For channel c of cell n with neighbor values x_t (t over the window taps
// that exist under the boundary mode):
//   q     = wq[c] * x_center + bq[c]
//   k_t   = wk[c] * x_t + bk[c]
//   s_t   = q * k_t + tap_bias[c][t]
//   a_t   = softmax_t(s_t)
//   out   = sum_t a_t * x_t
// Values are the raw neighbor states, so every output is a convex mix of
// its neighborhood.

/// Per-channel layout of the attention parameter array.
struct AttentionLayout {
    static constexpr int kQueryWeight = 0;
    static constexpr int kQueryBias = 1;
    static constexpr int kKeyWeight = 2;
    static constexpr int kKeyBias = 3;
    static constexpr int kTapBias = 4;
    static constexpr int kPerChannel = kTapBias + kWindow;
};

/// Writes attention outputs for `channels` into columns
/// [column, column + channels.size()) of `features`.
void attention_forward(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                       std::span<const double> params, RowMatrix& features, int column);

/// Accumulates state and parameter gradients given d(loss)/d(features) on
/// the attention columns.
void attention_backward(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                        std::span<const double> params, const RowMatrix& grad_features, int column,
                        Lattice& grad_state, std::span<double> grad_params);

/// Convenience form returning a cells x channels matrix.
[[nodiscard]] RowMatrix local_channel_attention(const Lattice& state, ChannelRange channels, const Neighborhood& hood,
                                                std::span<const double> params);

/// Softmax weights, laid out [cell][channel][tap]; taps outside a zero
/// boundary get weight 0.
[[nodiscard]] std::vector<double> attention_weights(const Lattice& state, ChannelRange channels,
                                                    const Neighborhood& hood, std::span<const double> params);

}  // namespace arcnca
