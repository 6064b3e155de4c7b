#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arcnca/engine.hpp"

namespace arcnca {

/// Public channels coordinate through the neighborhood; private channels
/// are per-cell memory written only by the propagation network.
struct ChannelPartition {
    ChannelRange public_channels{0, 30};
    ChannelRange private_channels{30, kChannels};
};

struct VariantSpec {
    std::string name;
    bool engram = true;
    Sensing sensing = Sensing::fixed;
    bool boundary_split = false;
    bool attention = false;
    bool patch_training = false;
    bool padded = false;
    int hidden_gene = 32;
    int hidden_prop = 32;
    int channels = kChannels;
};

/// Run-time knobs that are not part of a variant's identity.
struct VariantOptions {
    double fire_rate = 0.5;
    bool alive_masking = true;
    ChannelPartition partition{};
};

class UnknownVariant : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Registered variant names in canonical order.
[[nodiscard]] const std::vector<std::string>& variant_names();

/// Throws UnknownVariant listing the valid names.
[[nodiscard]] VariantSpec variant_spec(const std::string& name);

/// Update rules for a variant. NCA is a single rule over all channels;
/// EngramNCA is GeneCA (public write, sees public channels plus its own
/// private vector) followed by GenePropCA (private write, sees everything).
[[nodiscard]] std::vector<UpdateRuleSpec> variant_rules(const VariantSpec& spec, const ChannelPartition& partition);

struct Variant {
    VariantSpec spec;
    CellularModel model;
};

/// Fully initialized model for a registered variant name.
[[nodiscard]] Variant build_variant(const std::string& name, std::uint64_t seed, const VariantOptions& options = {});

/// Same, from an explicit spec (used for custom configurations).
[[nodiscard]] Variant build_variant(const VariantSpec& spec, std::uint64_t seed, const VariantOptions& options = {});

/// Applies one composite step; for EngramNCA models this is the
/// GeneCA-then-GenePropCA update with the shared alive mask.
[[nodiscard]] inline Lattice engram_step(const Variant& variant, const Lattice& state, Rng& rng) {
    return variant.model.step(state, rng);
}

}  // namespace arcnca
