// arcnca: train and evaluate cellular automata on ARC tasks.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "arcnca/checkpoint.hpp"
#include "arcnca/runner.hpp"

using namespace arcnca;

namespace {

struct SolveArgs {
    std::string manifest;
    std::string dataset;
    std::vector<std::string> variants;
    std::string padding = "ignore";
    std::uint64_t seed = 0;
    int workers = 1;
    int iterations = 3000;
    std::vector<double> thresholds = {-7.0, -6.0};
    std::string out = "runs/default";
    bool force = false;
    double power_watts = 200.0;
    double price_per_kwh = 0.37;
    int rollout_min = 64;
    int rollout_max = 96;
    int eval_steps = 150;
    double fire_rate = 0.5;
    bool no_alive_masking = false;
    bool filter_padded = false;
};

std::vector<std::string> split_names(const std::vector<std::string>& raw) {
    std::vector<std::string> names;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (!name.empty()) {
                names.push_back(name);
            }
        }
    }
    return names;
}

RunManifest build_manifest(const SolveArgs& a, const CLI::App& cmd) {
    RunManifest m;
    if (!a.manifest.empty()) {
        std::ifstream in(a.manifest);
        if (!in) {
            throw ConfigError("cannot read manifest " + a.manifest);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
        }
        m = manifest_from_json(j);
    }
    auto given = [&](const char* name) { return a.manifest.empty() || cmd.get_option(name)->count() > 0; };

    if (given("--dataset")) m.dataset = a.dataset;
    if (given("--variants") && !a.variants.empty()) m.variants = split_names(a.variants);
    if (given("--padding")) {
        if (a.padding == "max") {
            m.padding = PaddingMode::maximal_padding;
        } else if (a.padding == "ignore") {
            m.padding = PaddingMode::ignore_resizing;
        } else {
            throw ConfigError("--padding must be ignore or max");
        }
    }
    if (given("--seed")) m.global_seed = a.seed;
    if (given("--workers")) m.workers = a.workers;
    if (given("--iterations")) set_iterations(m.train, a.iterations);
    if (given("--thresholds")) {
        m.thresholds = a.thresholds;
        if (!m.thresholds.empty()) {
            m.eval.threshold_strict = *std::min_element(m.thresholds.begin(), m.thresholds.end());
            m.eval.threshold_loose = *std::max_element(m.thresholds.begin(), m.thresholds.end());
        }
    }
    if (given("--out")) m.output = a.out;
    if (given("--power-watts")) m.eval.power_watts = a.power_watts;
    if (given("--price-per-kwh")) m.eval.price_per_kwh = a.price_per_kwh;
    if (given("--rollout-min")) m.train.rollout_min = a.rollout_min;
    if (given("--rollout-max")) m.train.rollout_max = a.rollout_max;
    if (given("--eval-steps")) m.eval.max_eval_steps = a.eval_steps;
    if (given("--fire-rate")) m.variant_options.fire_rate = a.fire_rate;
    if (given("--no-alive-masking")) m.variant_options.alive_masking = !a.no_alive_masking;
    if (given("--filter-padded")) m.filter_padded = a.filter_padded;
    m.toolkit_version = kToolkitVersion;
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-task cellular automaton training and evaluation on ARC grids"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    app.require_subcommand(1);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Train and score every task for each variant");
    s->add_option("--manifest", solve.manifest, "Start from a saved manifest.json")->envname("ARCNCA_MANIFEST");
    s->add_option("--dataset", solve.dataset, "Directory of task JSON files")->envname("ARCNCA_DATASET");
    s->add_option("--variants", solve.variants, "Variant names, comma separated")
        ->delimiter(',')
        ->envname("ARCNCA_VARIANTS");
    s->add_option("--padding", solve.padding, "ignore or max")->envname("ARCNCA_PADDING");
    s->add_option("--seed", solve.seed, "Global seed")->envname("ARCNCA_SEED");
    s->add_option("--workers", solve.workers, "Worker threads")->envname("ARCNCA_WORKERS");
    s->add_option("--iterations", solve.iterations, "Training iterations per task")->envname("ARCNCA_ITERATIONS");
    s->add_option("--thresholds", solve.thresholds, "Solve thresholds on ln(MSE)")
        ->delimiter(',')
        ->envname("ARCNCA_THRESHOLDS");
    s->add_option("--out", solve.out, "Output directory")->envname("ARCNCA_OUT");
    s->add_flag("--force", solve.force, "Retrain tasks that already have results")->envname("ARCNCA_FORCE");
    s->add_option("--power-watts", solve.power_watts, "Device power for cost estimates")
        ->envname("ARCNCA_POWER_WATTS");
    s->add_option("--price-per-kwh", solve.price_per_kwh, "Energy price for cost estimates")
        ->envname("ARCNCA_PRICE_PER_KWH");
    s->add_option("--rollout-min", solve.rollout_min, "Shortest training rollout")->envname("ARCNCA_ROLLOUT_MIN");
    s->add_option("--rollout-max", solve.rollout_max, "Longest training rollout")->envname("ARCNCA_ROLLOUT_MAX");
    s->add_option("--eval-steps", solve.eval_steps, "Step cap when rolling to a stable state")
        ->envname("ARCNCA_EVAL_STEPS");
    s->add_option("--fire-rate", solve.fire_rate, "Per-cell update probability")->envname("ARCNCA_FIRE_RATE");
    s->add_flag("--no-alive-masking", solve.no_alive_masking, "Disable alive masking")
        ->envname("ARCNCA_NO_ALIVE_MASKING");
    s->add_flag("--filter-padded", solve.filter_padded, "Drop size-changing tasks in max padding mode")
        ->envname("ARCNCA_FILTER_PADDED");

    std::string report_dir = "runs/default";
    std::vector<double> report_thresholds = {-7.0, -6.0};
    double report_watts = 200.0;
    double report_price = 0.37;
    auto* r = app.add_subcommand("report", "Write Markdown and CSV tables for a run");
    r->add_option("--out", report_dir, "Run directory")->envname("ARCNCA_OUT");
    r->add_option("--thresholds", report_thresholds, "Solve thresholds on ln(MSE)")
        ->delimiter(',')
        ->envname("ARCNCA_THRESHOLDS");
    r->add_option("--power-watts", report_watts, "Device power for cost estimates")->envname("ARCNCA_POWER_WATTS");
    r->add_option("--price-per-kwh", report_price, "Energy price")->envname("ARCNCA_PRICE_PER_KWH");

    std::string frames_ckpt;
    std::string frames_task;
    std::string frames_out = "frames";
    int frames_steps = 100;
    int frames_scale = 8;
    std::uint64_t frames_seed = 0;
    bool frames_gif = false;
    bool frames_train = false;
    auto* f = app.add_subcommand("frames", "Export a rollout of a trained checkpoint as PNG frames");
    f->add_option("--checkpoint", frames_ckpt, "Checkpoint file")->required()->envname("ARCNCA_CHECKPOINT");
    f->add_option("--task", frames_task, "Task JSON file")->required()->envname("ARCNCA_TASK");
    f->add_option("--out", frames_out, "Output directory")->envname("ARCNCA_OUT");
    f->add_option("--steps", frames_steps, "Rollout steps")->envname("ARCNCA_STEPS");
    f->add_option("--scale", frames_scale, "Pixels per cell")->envname("ARCNCA_SCALE");
    f->add_option("--seed", frames_seed, "Fire-mask seed")->envname("ARCNCA_SEED");
    f->add_flag("--gif", frames_gif, "Also write rollout.gif")->envname("ARCNCA_GIF");
    f->add_flag("--train-input", frames_train, "Start from the first train input")->envname("ARCNCA_TRAIN_INPUT");

    std::string stats_dataset;
    auto* d = app.add_subcommand("dataset-stats", "Count tasks and pairs in a dataset directory");
    d->add_option("--dataset", stats_dataset, "Directory of task JSON files")
        ->required()
        ->envname("ARCNCA_DATASET");

    CLI11_PARSE(app, argc, argv);

    try {
        if (s->parsed()) {
            return cmd_solve(build_manifest(solve, *s), solve.force, std::cout);
        }
        if (r->parsed()) {
            EvalConfig cfg;
            cfg.power_watts = report_watts;
            cfg.price_per_kwh = report_price;
            std::cout << cmd_report(report_dir, report_thresholds, cfg);
            return 0;
        }
        if (f->parsed()) {
            const auto files =
                cmd_frames(frames_ckpt, frames_task, frames_out, frames_steps, frames_gif, frames_scale, frames_seed,
                           frames_train);
            std::cout << "wrote " << files.size() << " file(s) to " << frames_out << "\n";
            return 0;
        }
        if (d->parsed()) {
            std::cout << cmd_dataset_stats(stats_dataset);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
