#include <gtest/gtest.h>

#include "arcnca/codec.hpp"
#include "arcnca/engram.hpp"
#include "test_support.hpp"

using namespace arcnca;

namespace {

Lattice live_state(std::uint64_t seed, int h = 6, int w = 6) {
    std::mt19937_64 g(seed);
    Lattice l = encode_grid(testing_support::random_grid(g, h, w, 10), Palette(10));
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int n = 0; n < l.cells(); ++n) {
        for (int ch = kVisibleChannels; ch < kChannels; ++ch) {
            l.cell(n)[static_cast<std::size_t>(ch)] = u(g);
        }
        l.cell(n)[kAlphaChannel] = 1.0;
    }
    return l;
}

void randomize_outputs(Variant& v, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& a : v.model.parameters()) {
        if (a.name.ends_with(".w2")) {
            for (auto& w : a.values) {
                w = u(g);
            }
        }
    }
}

void zero_array(Variant& v, const std::string& name) {
    auto& a = v.model.parameters()[v.model.parameters().index_of(name)].values;
    std::fill(a.begin(), a.end(), 0.0);
}

}  // namespace

TEST(Registry, NamesAndSpecs) {
    EXPECT_EQ(variant_names(), (std::vector<std::string>{"NCA", "v1", "v2", "v3", "v4", "v3_large", "v3_large_padded"}));
    const auto nca = variant_spec("NCA");
    EXPECT_FALSE(nca.engram);
    EXPECT_EQ(nca.hidden_gene, 64);
    EXPECT_EQ(nca.channels, 50);

    const auto v1 = variant_spec("v1");
    EXPECT_TRUE(v1.engram);
    EXPECT_EQ(v1.sensing, Sensing::fixed);
    EXPECT_FALSE(v1.boundary_split || v1.attention || v1.patch_training);
    EXPECT_EQ(v1.hidden_gene, 32);
    EXPECT_EQ(v1.hidden_prop, 32);

    const auto v2 = variant_spec("v2");
    EXPECT_EQ(v2.sensing, Sensing::learnable);
    EXPECT_FALSE(v2.boundary_split || v2.attention || v2.patch_training);

    const auto v3 = variant_spec("v3");
    EXPECT_EQ(v3.sensing, Sensing::learnable);
    EXPECT_TRUE(v3.boundary_split && v3.attention);
    EXPECT_FALSE(v3.patch_training);

    const auto v4 = variant_spec("v4");
    EXPECT_TRUE(v4.boundary_split && v4.attention && v4.patch_training);

    const auto large = variant_spec("v3_large");
    EXPECT_EQ(large.hidden_gene, 132);
    EXPECT_EQ(large.hidden_prop, 132);
    EXPECT_TRUE(large.attention && large.boundary_split);
    EXPECT_FALSE(large.padded);
    EXPECT_TRUE(variant_spec("v3_large_padded").padded);
}

TEST(Registry, UnknownNameListsValidNames) {
    try {
        (void)variant_spec("v9");
        FAIL() << "expected UnknownVariant";
    } catch (const UnknownVariant& e) {
        const std::string msg = e.what();
        for (const auto& n : variant_names()) {
            EXPECT_NE(msg.find(n), std::string::npos) << n;
        }
    }
}

TEST(BuildVariant, NcaIsOneRuleOverEverything) {
    const auto v = build_variant("NCA", 1);
    ASSERT_EQ(v.model.rules().size(), 1u);
    const auto& r = v.model.rules()[0];
    EXPECT_EQ(r.hidden, 64);
    EXPECT_EQ(r.write, (ChannelRange{0, 50}));
    EXPECT_EQ(r.sensed, (ChannelRange{0, 50}));
    EXPECT_EQ(r.perception.mode, Sensing::fixed);
    EXPECT_EQ(r.perception.boundary, Boundary::toroidal);
}

TEST(BuildVariant, V3Layout) {
    const auto v = build_variant("v3", 1);
    ASSERT_EQ(v.model.rules().size(), 2u);
    const auto& gene = v.model.rules()[0];
    const auto& prop = v.model.rules()[1];
    EXPECT_EQ(gene.write, (ChannelRange{0, 30}));
    EXPECT_EQ(gene.sensed, (ChannelRange{0, 30}));
    EXPECT_EQ(gene.own, (ChannelRange{30, 50}));
    EXPECT_EQ(gene.perception.boundary, Boundary::zero);
    EXPECT_EQ(prop.write, (ChannelRange{30, 50}));
    EXPECT_EQ(prop.sensed, (ChannelRange{0, 50}));
    EXPECT_EQ(prop.perception.boundary, Boundary::toroidal);
    EXPECT_TRUE(gene.attention && prop.attention);
    EXPECT_EQ(gene.perception.mode, Sensing::learnable);
    EXPECT_EQ(gene.hidden, 32);
    EXPECT_EQ(prop.hidden, 32);
    EXPECT_EQ(v.model.options().alive_boundary, Boundary::zero);

    const auto large = build_variant("v3_large", 1);
    EXPECT_EQ(large.model.rules()[0].hidden, 132);
    EXPECT_EQ(large.model.rules()[1].hidden, 132);
}

TEST(BuildVariant, V1V2AreToroidal) {
    for (const char* name : {"v1", "v2"}) {
        const auto v = build_variant(name, 1);
        for (const auto& r : v.model.rules()) {
            EXPECT_EQ(r.perception.boundary, Boundary::toroidal) << name;
            EXPECT_FALSE(r.attention);
        }
    }
}

TEST(BuildVariant, PartitionInvariants) {
    const ChannelPartition p;
    EXPECT_EQ(p.public_channels.begin, 0);
    EXPECT_EQ(p.public_channels.end, p.private_channels.begin);
    EXPECT_EQ(p.private_channels.end, kChannels);
    EXPECT_TRUE((ChannelRange{0, kVisibleChannels}).within(p.public_channels));

    VariantOptions bad;
    bad.partition.public_channels = {0, 6};
    bad.partition.private_channels = {6, 50};
    EXPECT_THROW((void)build_variant("v1", 0, bad), std::invalid_argument);
}

TEST(BuildVariant, PureForSameSeed) {
    for (const auto& name : variant_names()) {
        EXPECT_EQ(build_variant(name, 42).model.parameters(), build_variant(name, 42).model.parameters()) << name;
    }
    EXPECT_FALSE(build_variant("v3", 1).model.parameters() == build_variant("v3", 2).model.parameters());
}

TEST(EngramStep, ZeroInitIsIdentityForEveryVariant) {
    const Lattice l = live_state(3);
    for (const auto& name : variant_names()) {
        const auto v = build_variant(name, 5);
        Rng rng(6);
        EXPECT_EQ(engram_step(v, l, rng), l) << name;
    }
}

TEST(EngramStep, FrozenGeneKeepsPublicChannels) {
    const Lattice l = live_state(7);
    for (const char* name : {"v1", "v3"}) {
        auto v = build_variant(name, 8);
        randomize_outputs(v, 9);
        zero_array(v, "gene.w2");
        Rng rng(10);
        const Lattice next = engram_step(v, l, rng);
        bool private_changed = false;
        for (int n = 0; n < l.cells(); ++n) {
            for (int ch = 0; ch < 30; ++ch) {
                ASSERT_EQ(next.cell(n)[static_cast<std::size_t>(ch)], l.cell(n)[static_cast<std::size_t>(ch)]);
            }
            for (int ch = 30; ch < 50; ++ch) {
                private_changed |= next.cell(n)[static_cast<std::size_t>(ch)] != l.cell(n)[static_cast<std::size_t>(ch)];
            }
        }
        EXPECT_TRUE(private_changed) << name;
    }
}

TEST(EngramStep, FrozenGenePropKeepsPrivateChannels) {
    const Lattice l = live_state(11);
    for (const char* name : {"v1", "v3"}) {
        auto v = build_variant(name, 12);
        randomize_outputs(v, 13);
        zero_array(v, "geneprop.w2");
        Rng rng(14);
        const Lattice next = engram_step(v, l, rng);
        for (int n = 0; n < l.cells(); ++n) {
            for (int ch = 30; ch < 50; ++ch) {
                ASSERT_EQ(next.cell(n)[static_cast<std::size_t>(ch)], l.cell(n)[static_cast<std::size_t>(ch)]);
            }
        }
    }
}

TEST(EngramStep, GenePropSeesUpdatedPublicState) {
    // With fire rate 1 the composite step must equal applying the rules in order.
    const Lattice l = live_state(15);
    VariantOptions opts;
    opts.fire_rate = 1.0;
    opts.alive_masking = false;
    auto v = build_variant("v3", 16, opts);
    randomize_outputs(v, 17);
    Rng rng(0);
    const Lattice composite = engram_step(v, l, rng);

    const RowMatrix gene = v.model.rule_delta(0, l);
    Lattice mid = l;
    for (int n = 0; n < l.cells(); ++n) {
        for (int o = 0; o < 30; ++o) {
            mid.cell(n)[static_cast<std::size_t>(o)] += gene(n, o);
        }
    }
    const RowMatrix prop = v.model.rule_delta(1, mid);
    for (int n = 0; n < l.cells(); ++n) {
        for (int o = 0; o < 20; ++o) {
            EXPECT_NEAR(composite.cell(n)[static_cast<std::size_t>(30 + o)],
                        mid.cell(n)[static_cast<std::size_t>(30 + o)] + prop(n, o), 1e-12);
        }
    }
}

TEST(BoundarySplit, PrivateImpulseWrapsPublicDoesNot) {
    for (const char* name : {"v3", "v4"}) {
        auto v = build_variant(name, 18);
        randomize_outputs(v, 19);
        const auto& gene = v.model.rules()[0];
        const auto& prop = v.model.rules()[1];
        const int h = 5;
        const int w = 7;
        Lattice base(h, w, kChannels);

        Lattice pub = base;
        pub.at(2, 0, 10) = 1.0;
        Lattice priv = base;
        priv.at(2, 0, 40) = 1.0;

        const RowMatrix pub_feat = perceive(pub, gene.sensed, gene.perception);
        const RowMatrix priv_feat = perceive(priv, prop.sensed, prop.perception);
        const int opposite = 2 * w + (w - 1);
        double pub_mass = 0.0;
        double priv_mass = 0.0;
        for (int k = 0; k < kPerceptionKernels; ++k) {
            pub_mass += std::abs(pub_feat(opposite, 10 * kPerceptionKernels + k));
            priv_mass += std::abs(priv_feat(opposite, 40 * kPerceptionKernels + k));
        }
        EXPECT_EQ(pub_mass, 0.0) << name;
        EXPECT_GT(priv_mass, 0.0) << name;

        // Same through the full rules: the opposite edge's delta moves only
        // for the private impulse.
        const RowMatrix gene_base = v.model.rule_delta(0, base);
        const RowMatrix gene_pub = v.model.rule_delta(0, pub);
        const RowMatrix prop_base = v.model.rule_delta(1, base);
        const RowMatrix prop_priv = v.model.rule_delta(1, priv);
        EXPECT_EQ((gene_pub.row(opposite) - gene_base.row(opposite)).cwiseAbs().maxCoeff(), 0.0) << name;
        EXPECT_GT((prop_priv.row(opposite) - prop_base.row(opposite)).cwiseAbs().maxCoeff(), 0.0) << name;
    }
}
