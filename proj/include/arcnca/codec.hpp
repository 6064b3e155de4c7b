#pragma once

#include <array>
#include <vector>

#include "arcnca/dataset.hpp"
#include "arcnca/lattice.hpp"

namespace arcnca {

using Rgba = std::array<double, 4>;

/// Integer color to normalized RGBA via the fixed-lightness HSL wheel.
/// Hue is v/n * 360 degrees, lightness 0.5, saturation 0.8; color 0 is
/// transparent black. Throws std::out_of_range unless 0 <= v < n.
[[nodiscard]] Rgba color_to_rgba(int v, int n);

class Palette {
public:
    explicit Palette(int n = kRawColors);

    [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
    [[nodiscard]] const Rgba& operator[](int v) const { return entries_.at(static_cast<std::size_t>(v)); }

    /// Smallest RGB distance between two distinct colors with v >= 1.
    [[nodiscard]] double min_rgb_distance() const;

private:
    std::vector<Rgba> entries_;
};

/// Palette used for a task: 10 colors, or 11 once the padding color is in play.
[[nodiscard]] Palette palette_for(bool padded);

/// Encodes a grid into a 50-channel lattice: RGBA, 4 LSB-first color bits,
/// then hidden channels set to 1.
[[nodiscard]] Lattice encode_grid(const Grid& grid, const Palette& palette);

/// Nearest palette color on RGB with an alpha gate at 0.5.
[[nodiscard]] Grid decode_lattice(const Lattice& lattice, const Palette& palette);

/// Diagnostic decode from the binary channels (each bit thresholded at 0.5).
[[nodiscard]] Grid decode_binary(const Lattice& lattice);

}  // namespace arcnca
