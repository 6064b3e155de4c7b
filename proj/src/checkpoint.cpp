#include "arcnca/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace arcnca {

namespace {

constexpr std::array<char, 8> kMagic = {'A', 'R', 'C', 'N', 'C', 'A', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw CheckpointError("truncated checkpoint");
    }
    return value;
}

std::string get_string(std::istream& in) {
    const auto size = get<std::uint32_t>(in);
    if (size > (1u << 20)) {
        throw CheckpointError("corrupt checkpoint string");
    }
    std::string s(size, '\0');
    if (!in.read(s.data(), size)) {
        throw CheckpointError("truncated checkpoint");
    }
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError("cannot write " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, ckpt.variant);
    put<std::uint64_t>(out, ckpt.seed);
    put<std::int32_t>(out, ckpt.iterations);
    put<double>(out, ckpt.options.fire_rate);
    put<std::uint8_t>(out, ckpt.options.alive_masking ? 1 : 0);
    put<std::int32_t>(out, ckpt.options.partition.public_channels.end);
    put<std::uint8_t>(out, ckpt.padded ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.parameters.count()));
    for (const auto& array : ckpt.parameters) {
        put_string(out, array.name);
        put<std::uint64_t>(out, array.values.size());
        out.write(reinterpret_cast<const char*>(array.values.data()),
                  static_cast<std::streamsize>(array.values.size() * sizeof(double)));
    }
    if (!out) {
        throw CheckpointError("failed writing " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("missing checkpoint " + path.string());
    }
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw CheckpointError(path.string() + " is not a checkpoint");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.variant = get_string(in);
    ckpt.seed = get<std::uint64_t>(in);
    ckpt.iterations = get<std::int32_t>(in);
    ckpt.options.fire_rate = get<double>(in);
    ckpt.options.alive_masking = get<std::uint8_t>(in) != 0;
    const int public_end = get<std::int32_t>(in);
    ckpt.options.partition.public_channels = {0, public_end};
    ckpt.options.partition.private_channels = {public_end, kChannels};
    ckpt.padded = get<std::uint8_t>(in) != 0;
    const auto count = get<std::uint32_t>(in);
    for (std::uint32_t a = 0; a < count; ++a) {
        auto name = get_string(in);
        const auto size = get<std::uint64_t>(in);
        if (size > (1ull << 28)) {
            throw CheckpointError("corrupt checkpoint array size");
        }
        const auto index = ckpt.parameters.add(std::move(name), size);
        auto& values = ckpt.parameters[index].values;
        if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size * sizeof(double)))) {
            throw CheckpointError("truncated checkpoint");
        }
    }
    return ckpt;
}

Checkpoint make_checkpoint(const Variant& variant, std::uint64_t seed, int iterations, const VariantOptions& options,
                           bool padded) {
    return {variant.spec.name, seed, iterations, options, padded, variant.model.parameters()};
}

Variant restore_variant(const Checkpoint& ckpt) {
    Variant variant = build_variant(ckpt.variant, ckpt.seed, ckpt.options);
    auto& params = variant.model.parameters();
    if (params.count() != ckpt.parameters.count()) {
        throw CheckpointError("checkpoint does not match variant " + ckpt.variant);
    }
    for (std::size_t a = 0; a < params.count(); ++a) {
        if (params[a].name != ckpt.parameters[a].name ||
            params[a].values.size() != ckpt.parameters[a].values.size()) {
            throw CheckpointError("checkpoint array " + ckpt.parameters[a].name + " does not match variant");
        }
        params[a].values = ckpt.parameters[a].values;
    }
    return variant;
}

}  // namespace arcnca
