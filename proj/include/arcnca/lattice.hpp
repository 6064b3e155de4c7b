#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace arcnca {

constexpr int kChannels = 50;
constexpr int kRgbaChannels = 4;
constexpr int kBinaryChannels = 4;
constexpr int kAlphaChannel = 3;
constexpr int kVisibleChannels = kRgbaChannels + kBinaryChannels;

/// Half-open channel interval [begin, end).
struct ChannelRange {
    int begin = 0;
    int end = 0;

    [[nodiscard]] int size() const { return end - begin; }
    [[nodiscard]] bool empty() const { return end <= begin; }
    [[nodiscard]] bool contains(int ch) const { return ch >= begin && ch < end; }
    [[nodiscard]] bool within(const ChannelRange& outer) const {
        return empty() || (begin >= outer.begin && end <= outer.end);
    }
    bool operator==(const ChannelRange&) const = default;
};

/// Cell-state array of shape (height, width, channels), stored cell-major:
/// the channels of one cell are contiguous.
class Lattice {
public:
    Lattice() = default;
    Lattice(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          values_(static_cast<std::size_t>(height) * width * channels, fill) {}

    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int channels() const { return channels_; }
    [[nodiscard]] int cells() const { return height_ * width_; }

    [[nodiscard]] double& at(int row, int col, int ch) { return values_[offset(row, col) + ch]; }
    [[nodiscard]] double at(int row, int col, int ch) const { return values_[offset(row, col) + ch]; }

    [[nodiscard]] std::span<double> cell(int index) {
        return {values_.data() + static_cast<std::size_t>(index) * channels_, static_cast<std::size_t>(channels_)};
    }
    [[nodiscard]] std::span<const double> cell(int index) const {
        return {values_.data() + static_cast<std::size_t>(index) * channels_, static_cast<std::size_t>(channels_)};
    }

    [[nodiscard]] std::vector<double>& values() { return values_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double* data() { return values_.data(); }
    [[nodiscard]] const double* data() const { return values_.data(); }

    [[nodiscard]] bool same_shape(const Lattice& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    bool operator==(const Lattice&) const = default;

private:
    [[nodiscard]] std::size_t offset(int row, int col) const {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> values_;
};

}  // namespace arcnca
