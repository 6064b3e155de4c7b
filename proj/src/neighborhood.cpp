#include "arcnca/neighborhood.hpp"

namespace arcnca {

Neighborhood::Neighborhood(int height, int width, Boundary boundary)
    : height_(height), width_(width), boundary_(boundary),
      taps_(static_cast<std::size_t>(height) * width * kWindow, -1) {
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const int cell = r * width + c;
            for (int t = 0; t < kWindow; ++t) {
                int rr = r + kTapRow[t];
                int cc = c + kTapCol[t];
                if (boundary == Boundary::toroidal) {
                    rr = (rr + height) % height;
                    cc = (cc + width) % width;
                } else if (rr < 0 || rr >= height || cc < 0 || cc >= width) {
                    continue;
                }
                taps_[static_cast<std::size_t>(cell) * kWindow + t] = rr * width + cc;
            }
        }
    }
}

}  // namespace arcnca
