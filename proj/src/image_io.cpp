#include "arcnca/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <unordered_map>

namespace arcnca {

Image lattice_to_image(const Lattice& lattice, int scale) {
    if (scale < 1) {
        throw std::invalid_argument("scale must be >= 1");
    }
    if (lattice.channels() < 4) {
        throw std::invalid_argument("image export needs RGBA channels");
    }
    Image image;
    image.width = lattice.width() * scale;
    image.height = lattice.height() * scale;
    image.rgba.resize(static_cast<std::size_t>(image.width) * image.height * 4);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            auto* px = &image.rgba[(static_cast<std::size_t>(y) * image.width + x) * 4];
            for (int k = 0; k < 4; ++k) {
                const double v = std::clamp(lattice.at(y / scale, x / scale, k), 0.0, 1.0);
                px[k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return image;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw std::runtime_error("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng error while writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        auto* row = const_cast<png_bytep>(&image.rgba[static_cast<std::size_t>(y) * image.width * 4]);
        png_write_row(png, row);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
        throw std::runtime_error("cannot read " + path.string());
    }
    img.format = PNG_FORMAT_RGBA;
    Image image;
    image.width = static_cast<int>(img.width);
    image.height = static_cast<int>(img.height);
    image.rgba.resize(PNG_IMAGE_SIZE(img));
    if (png_image_finish_read(&img, nullptr, image.rgba.data(), 0, nullptr) == 0) {
        png_image_free(&img);
        throw std::runtime_error("cannot decode " + path.string());
    }
    return image;
}

namespace {

class BitWriter {
public:
    void put(unsigned code, int bits) {
        acc_ |= static_cast<std::uint32_t>(code) << count_;
        count_ += bits;
        while (count_ >= 8) {
            bytes.push_back(static_cast<std::uint8_t>(acc_ & 0xFFu));
            acc_ >>= 8;
            count_ -= 8;
        }
    }
    void flush() {
        if (count_ > 0) {
            bytes.push_back(static_cast<std::uint8_t>(acc_ & 0xFFu));
        }
        acc_ = 0;
        count_ = 0;
    }
    std::vector<std::uint8_t> bytes;

private:
    std::uint32_t acc_ = 0;
    int count_ = 0;
};

std::vector<std::uint8_t> lzw_encode(const std::vector<std::uint8_t>& indices) {
    constexpr int kMinCodeSize = 8;
    constexpr unsigned kClear = 1u << kMinCodeSize;
    constexpr unsigned kEnd = kClear + 1;
    constexpr unsigned kMaxCode = 4095;

    BitWriter out;
    std::unordered_map<std::uint32_t, unsigned> dict;
    int code_size = kMinCodeSize + 1;
    unsigned last_code = kEnd;
    out.put(kClear, code_size);

    if (indices.empty()) {
        out.put(kEnd, code_size);
        out.flush();
        return std::move(out.bytes);
    }
    unsigned current = indices.front();
    for (std::size_t i = 1; i < indices.size(); ++i) {
        const unsigned next = indices[i];
        const std::uint32_t key = (current << 8) | next;
        if (auto it = dict.find(key); it != dict.end()) {
            current = it->second;
            continue;
        }
        out.put(current, code_size);
        dict.emplace(key, ++last_code);
        if (last_code >= (1u << code_size)) {
            ++code_size;
        }
        if (last_code == kMaxCode) {
            out.put(kClear, code_size);
            dict.clear();
            code_size = kMinCodeSize + 1;
            last_code = kEnd;
        }
        current = next;
    }
    out.put(current, code_size);
    out.put(kEnd, code_size);
    out.flush();
    return std::move(out.bytes);
}

void put_u16(std::ofstream& out, int v) {
    out.put(static_cast<char>(v & 0xFF));
    out.put(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

void write_gif(const std::filesystem::path& path, const std::vector<Image>& frames, int delay_centiseconds) {
    if (frames.empty()) {
        throw std::invalid_argument("gif needs at least one frame");
    }
    const int width = frames.front().width;
    const int height = frames.front().height;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write("GIF89a", 6);
    put_u16(out, width);
    put_u16(out, height);
    out.put(static_cast<char>(0xF7));  // global table, 256 entries
    out.put(0);
    out.put(0);
    for (int i = 0; i < 256; ++i) {
        out.put(static_cast<char>(((i >> 5) & 7) * 255 / 7));
        out.put(static_cast<char>(((i >> 2) & 7) * 255 / 7));
        out.put(static_cast<char>((i & 3) * 255 / 3));
    }
    // Loop forever.
    const std::array<std::uint8_t, 19> netscape = {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P',
                                                   'E',  '2',  '.',  '0', 0x03, 0x01, 0x00, 0x00, 0x00};
    out.write(reinterpret_cast<const char*>(netscape.data()), netscape.size());

    for (const auto& frame : frames) {
        if (frame.width != width || frame.height != height) {
            throw std::invalid_argument("gif frames must share dimensions");
        }
        std::vector<std::uint8_t> indices(static_cast<std::size_t>(width) * height);
        for (std::size_t p = 0; p < indices.size(); ++p) {
            const auto* px = &frame.rgba[p * 4];
            const unsigned a = px[3];
            const unsigned r = px[0] * a / 255;
            const unsigned g = px[1] * a / 255;
            const unsigned b = px[2] * a / 255;
            indices[p] = static_cast<std::uint8_t>(((r >> 5) << 5) | ((g >> 5) << 2) | (b >> 6));
        }
        const std::array<std::uint8_t, 4> gce_head = {0x21, 0xF9, 0x04, 0x04};
        out.write(reinterpret_cast<const char*>(gce_head.data()), gce_head.size());
        put_u16(out, delay_centiseconds);
        out.put(0);
        out.put(0);

        out.put(0x2C);
        put_u16(out, 0);
        put_u16(out, 0);
        put_u16(out, width);
        put_u16(out, height);
        out.put(0);

        out.put(8);
        const auto data = lzw_encode(indices);
        for (std::size_t pos = 0; pos < data.size(); pos += 255) {
            const auto n = std::min<std::size_t>(255, data.size() - pos);
            out.put(static_cast<char>(n));
            out.write(reinterpret_cast<const char*>(data.data() + pos), static_cast<std::streamsize>(n));
        }
        out.put(0);
    }
    out.put(0x3B);
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

}  // namespace arcnca
