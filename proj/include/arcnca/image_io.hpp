#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "arcnca/lattice.hpp"

namespace arcnca {

/// 8-bit straight-alpha RGBA image.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba;
};

/// Channels 0-3 clamped to [0,1] and scaled to 8 bits; each cell becomes a
/// scale x scale block.
[[nodiscard]] Image lattice_to_image(const Lattice& lattice, int scale = 1);

/// Throws std::runtime_error on I/O failure.
void write_png(const std::filesystem::path& path, const Image& image);

/// Reads an 8-bit RGBA PNG (used by tests).
[[nodiscard]] Image read_png(const std::filesystem::path& path);

/// Animated GIF with a fixed 3-3-2 palette; alpha is composited onto black.
void write_gif(const std::filesystem::path& path, const std::vector<Image>& frames, int delay_centiseconds = 8);

}  // namespace arcnca
