#include "arcnca/codec.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arcnca {

Rgba color_to_rgba(int v, int n) {
    if (n <= 0 || v < 0 || v >= n) {
        throw std::out_of_range("color " + std::to_string(v) + " outside palette of " + std::to_string(n));
    }
    const double on = v > 0 ? 1.0 : 0.0;
    const double hue = (static_cast<double>(v) * 360.0) / static_cast<double>(n);
    const double lightness = 0.5;
    const double saturation = 0.8;
    const double chroma = (1.0 - std::abs(2.0 * lightness - 1.0)) * saturation * on;
    const double offset = (lightness - chroma / 2.0) * on;
    const double x = chroma * (1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0));

    // Standard HSL sextants. In [120, 180) green carries the chroma.
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    if (hue < 60.0) {
        r = chroma, g = x;
    } else if (hue < 120.0) {
        r = x, g = chroma;
    } else if (hue < 180.0) {
        g = chroma, b = x;
    } else if (hue < 240.0) {
        g = x, b = chroma;
    } else if (hue < 300.0) {
        r = x, b = chroma;
    } else {
        r = chroma, b = x;
    }
    // (c + m) * 255 / 255: the lattice keeps the unit scale.
    return {r + offset, g + offset, b + offset, on};
}

Palette::Palette(int n) {
    if (n < 2) {
        throw std::invalid_argument("palette needs at least two colors");
    }
    entries_.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        entries_.push_back(color_to_rgba(v, n));
    }
}

double Palette::min_rgb_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 1; a < size(); ++a) {
        for (int b = a + 1; b < size(); ++b) {
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = entries_[a][k] - entries_[b][k];
                d2 += d * d;
            }
            best = std::min(best, std::sqrt(d2));
        }
    }
    return best;
}

Palette palette_for(bool padded) {
    return Palette(padded ? kRawColors + 1 : kRawColors);
}

Lattice encode_grid(const Grid& grid, const Palette& palette) {
    if (grid.max_value() >= palette.size()) {
        throw std::out_of_range("grid value " + std::to_string(grid.max_value()) + " outside palette");
    }
    Lattice lattice(grid.height(), grid.width(), kChannels, 1.0);
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            const int v = grid.at(r, c);
            const Rgba& rgba = palette[v];
            for (int k = 0; k < kRgbaChannels; ++k) {
                lattice.at(r, c, k) = rgba[k];
            }
            for (int k = 0; k < kBinaryChannels; ++k) {
                lattice.at(r, c, kRgbaChannels + k) = static_cast<double>((v >> k) & 1);
            }
        }
    }
    return lattice;
}

Grid decode_lattice(const Lattice& lattice, const Palette& palette) {
    if (lattice.channels() < kRgbaChannels) {
        throw std::invalid_argument("decode needs at least 4 channels");
    }
    Grid grid(lattice.height(), lattice.width());
    for (int r = 0; r < lattice.height(); ++r) {
        for (int c = 0; c < lattice.width(); ++c) {
            if (lattice.at(r, c, kAlphaChannel) < 0.5) {
                grid.set(r, c, 0);
                continue;
            }
            int best = 1;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (int v = 1; v < palette.size(); ++v) {
                double d2 = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double d = lattice.at(r, c, k) - palette[v][k];
                    d2 += d * d;
                }
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = v;
                }
            }
            grid.set(r, c, best);
        }
    }
    return grid;
}

Grid decode_binary(const Lattice& lattice) {
    if (lattice.channels() < kVisibleChannels) {
        throw std::invalid_argument("binary decode needs at least 8 channels");
    }
    Grid grid(lattice.height(), lattice.width());
    for (int r = 0; r < lattice.height(); ++r) {
        for (int c = 0; c < lattice.width(); ++c) {
            int v = 0;
            for (int k = 0; k < kBinaryChannels; ++k) {
                if (lattice.at(r, c, kRgbaChannels + k) >= 0.5) {
                    v |= 1 << k;
                }
            }
            grid.set(r, c, v);
        }
    }
    return grid;
}

}  // namespace arcnca
