#include "arcnca/engram.hpp"

#include <algorithm>

namespace arcnca {

const std::vector<std::string>& variant_names() {
    static const std::vector<std::string> names = {"NCA", "v1", "v2", "v3", "v4", "v3_large", "v3_large_padded"};
    return names;
}

VariantSpec variant_spec(const std::string& name) {
    VariantSpec spec;
    spec.name = name;
    if (name == "NCA") {
        spec.engram = false;
        spec.hidden_gene = 64;
        spec.hidden_prop = 0;
        return spec;
    }
    if (name == "v1") {
        return spec;
    }
    // Learnable sensing from v2 onwards; split boundaries and attention from v3.
    spec.sensing = Sensing::learnable;
    if (name == "v2") {
        return spec;
    }
    spec.boundary_split = true;
    spec.attention = true;
    if (name == "v3") {
        return spec;
    }
    if (name == "v4") {
        spec.patch_training = true;
        return spec;
    }
    spec.hidden_gene = 132;
    spec.hidden_prop = 132;
    if (name == "v3_large") {
        return spec;
    }
    if (name == "v3_large_padded") {
        spec.padded = true;
        return spec;
    }
    std::string valid;
    for (const auto& n : variant_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw UnknownVariant("unknown variant \"" + name + "\"; valid names: " + valid);
}

std::vector<UpdateRuleSpec> variant_rules(const VariantSpec& spec, const ChannelPartition& partition) {
    const ChannelRange all{0, spec.channels};
    if (!spec.engram) {
        UpdateRuleSpec nca;
        nca.name = "nca";
        nca.sensed = all;
        nca.write = all;
        nca.perception = {spec.sensing, Boundary::toroidal, kPerceptionKernels};
        nca.attention = spec.attention;
        nca.hidden = spec.hidden_gene;
        return {nca};
    }
    const auto& pub = partition.public_channels;
    const auto& priv = partition.private_channels;
    if (pub.begin != 0 || pub.end != priv.begin || priv.end != spec.channels || pub.size() < kVisibleChannels) {
        throw std::invalid_argument("channel partition must split [0, channels) with RGBA and binary channels public");
    }
    UpdateRuleSpec gene;
    gene.name = "gene";
    gene.sensed = pub;
    gene.own = priv;
    gene.write = pub;
    gene.perception = {spec.sensing, spec.boundary_split ? Boundary::zero : Boundary::toroidal, kPerceptionKernels};
    gene.attention = spec.attention;
    gene.hidden = spec.hidden_gene;

    UpdateRuleSpec prop;
    prop.name = "geneprop";
    prop.sensed = all;
    prop.write = priv;
    prop.perception = {spec.sensing, Boundary::toroidal, kPerceptionKernels};
    prop.attention = spec.attention;
    prop.hidden = spec.hidden_prop;
    return {gene, prop};
}

Variant build_variant(const VariantSpec& spec, std::uint64_t seed, const VariantOptions& options) {
    auto rules = variant_rules(spec, options.partition);
    StepOptions step;
    step.fire_rate = options.fire_rate;
    step.alive_masking = options.alive_masking;
    // Alpha is public, so the alive mask follows the public-writing rule.
    step.alive_boundary = rules.front().perception.boundary;
    Variant variant{spec, CellularModel(spec.channels, std::move(rules), step)};
    variant.model.initialize(seed);
    return variant;
}

Variant build_variant(const std::string& name, std::uint64_t seed, const VariantOptions& options) {
    return build_variant(variant_spec(name), seed, options);
}

}  // namespace arcnca
