#pragma once

#include <array>
#include <vector>

namespace arcnca {

enum class Boundary { toroidal, zero };

constexpr int kWindow = 9;
constexpr int kCenterTap = 4;

/// Offsets of the 3x3 window in row-major tap order.
constexpr std::array<int, kWindow> kTapRow = {-1, -1, -1, 0, 0, 0, 1, 1, 1};
constexpr std::array<int, kWindow> kTapCol = {-1, 0, 1, -1, 0, 1, -1, 0, 1};

/// Cell index of every 3x3 tap for every cell, -1 where a zero boundary cuts
/// the window off.
class Neighborhood {
public:
    Neighborhood(int height, int width, Boundary boundary);

    [[nodiscard]] int tap(int cell, int t) const { return taps_[static_cast<std::size_t>(cell) * kWindow + t]; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int cells() const { return height_ * width_; }
    [[nodiscard]] Boundary boundary() const { return boundary_; }

private:
    int height_;
    int width_;
    Boundary boundary_;
    std::vector<int> taps_;
};

}  // namespace arcnca
