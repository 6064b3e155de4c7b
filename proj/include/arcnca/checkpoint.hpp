#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "arcnca/engram.hpp"

namespace arcnca {

constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    std::string variant;
    std::uint64_t seed = 0;
    int iterations = 0;
    VariantOptions options;
    /// Trained on grids padded to 30x30 with the 11-color palette.
    bool padded = false;
    ParameterSet parameters;
};

// Binary layout, little-endian:
//   "ARCNCACK" u32 version
//   str variant, u64 seed, i32 iterations
//   f64 fire_rate, u8 alive_masking, i32 public_end, u8 padded
//   u32 array_count, then per array: str name, u64 length, f64[length]
// where str is u32 length followed by bytes.

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

[[nodiscard]] Checkpoint make_checkpoint(const Variant& variant, std::uint64_t seed, int iterations,
                                         const VariantOptions& options, bool padded);

/// Rebuilds the variant and installs the stored parameters.
[[nodiscard]] Variant restore_variant(const Checkpoint& ckpt);

}  // namespace arcnca
