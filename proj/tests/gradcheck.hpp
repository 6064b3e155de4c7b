#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "arcnca/engine.hpp"
#include "arcnca/trainer.hpp"

namespace testing_support {

struct ArrayGradError {
    std::string name;
    double analytic_norm = 0.0;
    double relative_error = 0.0;
};

/// Loss of a T-step rollout under an all-firing mask against `target`,
/// measured on every channel.
inline double rollout_loss(const arcnca::CellularModel& model, const arcnca::Lattice& start,
                           const arcnca::Lattice& target, int steps) {
    const arcnca::FireMask all(static_cast<std::size_t>(start.cells()), 1);
    arcnca::Lattice state = start;
    for (int s = 0; s < steps; ++s) {
        state = model.step(state, all);
    }
    return arcnca::pixelwise_mse(state, target, {0, start.channels()});
}

/// Compares BPTT parameter gradients with central differences, array by
/// array, as ||g_a - g_fd|| / max(||g_a||, ||g_fd||).
inline std::vector<ArrayGradError> check_gradients(arcnca::CellularModel model, const arcnca::Lattice& start,
                                                   const arcnca::Lattice& target, int steps, double h = 1e-6) {
    arcnca::Rng rng(0);
    arcnca::RolloutTape tape;
    const arcnca::Lattice final_state = tape.run(model, start, steps, rng);
    auto grads = model.parameters().zeros_like();
    (void)tape.backward(model, arcnca::pixelwise_mse_grad(final_state, target, {0, start.channels()}), grads);

    std::vector<ArrayGradError> out;
    auto& params = model.parameters();
    for (std::size_t a = 0; a < params.count(); ++a) {
        double diff2 = 0.0;
        double an2 = 0.0;
        double fd2 = 0.0;
        for (std::size_t i = 0; i < params[a].values.size(); ++i) {
            const double saved = params[a].values[i];
            params[a].values[i] = saved + h;
            const double up = rollout_loss(model, start, target, steps);
            params[a].values[i] = saved - h;
            const double down = rollout_loss(model, start, target, steps);
            params[a].values[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = grads[a].values[i];
            diff2 += (an - fd) * (an - fd);
            an2 += an * an;
            fd2 += fd * fd;
        }
        const double scale = std::max(std::sqrt(an2), std::sqrt(fd2));
        out.push_back({params[a].name, std::sqrt(an2), scale > 0.0 ? std::sqrt(diff2) / scale : 0.0});
    }
    return out;
}

/// Random values for every parameter, scaled per array.
inline void randomize(arcnca::ParameterSet& params, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& array : params) {
        for (auto& v : array.values) {
            v += u(rng);
        }
    }
}

struct GradCase {
    std::string label;
    arcnca::CellularModel model;
    arcnca::Lattice start;
    arcnca::Lattice target;
};

/// The configurations used for gradient checks: 4x4 lattices with 8
/// channels covering fixed and learnable sensing, attention, both
/// boundaries, two sequential rules and alive masking.
inline std::vector<GradCase> gradient_cases() {
    using namespace arcnca;
    std::vector<GradCase> cases;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto lattice = [&]() {
        Lattice l(4, 4, 8);
        for (auto& v : l.values()) {
            v = u(rng);
        }
        return l;
    };
    auto rule = [](std::string name, ChannelRange sensed, ChannelRange own, ChannelRange write, Sensing sensing,
                   Boundary boundary, bool attention) {
        UpdateRuleSpec r;
        r.name = std::move(name);
        r.sensed = sensed;
        r.own = own;
        r.write = write;
        r.perception.mode = sensing;
        r.perception.boundary = boundary;
        r.attention = attention;
        r.hidden = 6;
        r.final_layer_zero_init = false;
        return r;
    };
    StepOptions no_alive{1.0, false, Boundary::toroidal, 0.1};

    {
        CellularModel m(8, {rule("nca", {0, 8}, {}, {0, 8}, Sensing::fixed, Boundary::toroidal, false)}, no_alive);
        m.initialize(1);
        cases.push_back({"fixed sensing, toroidal", m, lattice(), lattice()});
    }
    {
        CellularModel m(8, {rule("nca", {0, 8}, {}, {0, 8}, Sensing::learnable, Boundary::zero, true)}, no_alive);
        m.initialize(2);
        randomize(m.parameters(), 3, 0.2);
        cases.push_back({"learnable sensing + attention, zero boundary", m, lattice(), lattice()});
    }
    {
        StepOptions opts = no_alive;
        opts.alive_boundary = Boundary::zero;
        CellularModel m(8,
                        {rule("gene", {0, 6}, {6, 8}, {0, 6}, Sensing::learnable, Boundary::zero, true),
                         rule("prop", {0, 8}, {}, {6, 8}, Sensing::learnable, Boundary::toroidal, true)},
                        opts);
        m.initialize(4);
        randomize(m.parameters(), 5, 0.2);
        cases.push_back({"two rules, split boundary, attention", m, lattice(), lattice()});
    }
    {
        StepOptions alive{1.0, true, Boundary::toroidal, 0.1};
        CellularModel m(8, {rule("nca", {0, 8}, {}, {0, 8}, Sensing::learnable, Boundary::toroidal, true)}, alive);
        m.initialize(6);
        randomize(m.parameters(), 7, 0.2);
        // Small writes keep every cell far from the alive threshold.
        for (auto& w : m.parameters()[m.parameters().index_of("nca.w2")].values) {
            w *= 0.05;
        }
        Lattice start = lattice();
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                start.at(r, c, kAlphaChannel) = c == 0 ? 0.9 : 0.0;
            }
        }
        cases.push_back({"alive masking with a dead column", m, start, lattice()});
    }
    return cases;
}

}  // namespace testing_support
