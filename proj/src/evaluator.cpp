#include "arcnca/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "arcnca/image_io.hpp"

namespace arcnca {

using nlohmann::json;

void EvalConfig::validate() const {
    if (!(threshold_loose > threshold_strict)) {
        throw std::invalid_argument("loose threshold must exceed the strict threshold");
    }
    if (max_eval_steps < 1 || stability_window < 1 || !(stability_epsilon > 0.0)) {
        throw std::invalid_argument("stability settings out of range");
    }
    if (power_watts < 0.0 || price_per_kwh < 0.0) {
        throw std::invalid_argument("power and price must be non-negative");
    }
}

json to_json(const TaskResult& r) {
    json j = {
        {"schema", kResultSchemaVersion},
        {"task_id", r.task_id},
        {"variant", r.variant},
        {"status", r.status},
        {"log_loss", r.log_loss},
        {"solved_strict", r.solved_strict},
        {"solved_loose", r.solved_loose},
        {"exact_match", r.exact_match},
        {"steps_to_stable", r.steps_to_stable},
        {"max_pixel_sq_error", r.max_pixel_sq_error},
        {"best_step_log_loss", r.best_step_log_loss},
        {"train_log_loss", r.train_log_loss},
        {"wall_time_seconds", r.wall_time_seconds},
    };
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
    return j;
}

TaskResult task_result_from_json(const json& j) {
    if (j.value("schema", 0) != kResultSchemaVersion) {
        throw std::runtime_error("unsupported result schema");
    }
    TaskResult r;
    r.task_id = j.at("task_id").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.status = j.value("status", std::string("ok"));
    r.error = j.value("error", std::string());
    r.log_loss = j.value("log_loss", 0.0);
    r.solved_strict = j.value("solved_strict", false);
    r.solved_loose = j.value("solved_loose", false);
    r.exact_match = j.value("exact_match", false);
    r.steps_to_stable = j.value("steps_to_stable", 0);
    r.max_pixel_sq_error = j.value("max_pixel_sq_error", 0.0);
    r.best_step_log_loss = j.value("best_step_log_loss", 0.0);
    r.train_log_loss = j.value("train_log_loss", 0.0);
    r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    return r;
}

StableRollout rollout_to_stable(const CellularModel& model, const Lattice& start, const EvalConfig& cfg, Rng& rng,
                                const Lattice* target) {
    cfg.validate();
    const ChannelRange watch = cfg.stability_channels;
    if (!watch.within({0, start.channels()}) || watch.empty()) {
        throw std::invalid_argument("stability channels outside lattice");
    }
    StableRollout out{start, 0, false, {}};
    int calm = 0;
    while (out.steps < cfg.max_eval_steps) {
        Lattice next = model.step(out.state, rng);
        double change = 0.0;
        for (int n = 0; n < next.cells(); ++n) {
            const auto a = next.cell(n);
            const auto b = out.state.cell(n);
            for (int c = watch.begin; c < watch.end; ++c) {
                change = std::max(change, std::abs(a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)]));
            }
        }
        out.state = std::move(next);
        ++out.steps;
        if (target != nullptr) {
            out.step_log_loss.push_back(clamped_log(pixelwise_mse(out.state, *target, cfg.loss_channels)));
        }
        calm = change < cfg.stability_epsilon ? calm + 1 : 0;
        if (calm >= cfg.stability_window) {
            out.stable = true;
            break;
        }
    }
    return out;
}

StateScore score_state(const Lattice& state, const Grid& target, const Palette& palette, const EvalConfig& cfg) {
    const Lattice encoded = encode_grid(target, palette);
    StateScore score;
    score.mse = pixelwise_mse(state, encoded, cfg.loss_channels);
    score.log_loss = clamped_log(score.mse);
    for (int n = 0; n < state.cells(); ++n) {
        double sq = 0.0;
        for (int c = cfg.loss_channels.begin; c < cfg.loss_channels.end; ++c) {
            const double d = state.cell(n)[static_cast<std::size_t>(c)] - encoded.cell(n)[static_cast<std::size_t>(c)];
            sq += d * d;
        }
        score.max_pixel_sq_error = std::max(score.max_pixel_sq_error, sq / cfg.loss_channels.size());
    }
    score.exact_match = decode_lattice(state, palette) == target;
    return score;
}

TaskResult score_task(const TrainedModel& model, const TaskRecord& task, const EvalConfig& cfg, Rng& rng) {
    if (task.test_pairs.empty()) {
        throw std::invalid_argument(task.task_id + ": no test pairs to score");
    }
    const Palette palette = palette_for(task.padded);
    TaskResult result;
    result.task_id = task.task_id;
    result.variant = model.variant.spec.name;
    result.train_log_loss = clamped_log(model.final_train_loss);

    double mse_total = 0.0;
    double best_total = 0.0;
    bool all_exact = true;
    for (const auto& pair : task.test_pairs) {
        if (pair.input.height() != pair.output.height() || pair.input.width() != pair.output.width()) {
            throw std::invalid_argument(task.task_id + ": test pair changes size; pad the task first");
        }
        const Lattice target = encode_grid(pair.output, palette);
        const auto run = rollout_to_stable(model.variant.model, encode_grid(pair.input, palette), cfg, rng, &target);
        const auto score = score_state(run.state, pair.output, palette, cfg);
        mse_total += score.mse;
        best_total += run.step_log_loss.empty() ? score.log_loss
                                                : *std::min_element(run.step_log_loss.begin(), run.step_log_loss.end());
        all_exact = all_exact && score.exact_match;
        result.steps_to_stable = std::max(result.steps_to_stable, run.steps);
        result.max_pixel_sq_error = std::max(result.max_pixel_sq_error, score.max_pixel_sq_error);
    }
    const auto pairs = static_cast<double>(task.test_pairs.size());
    result.log_loss = clamped_log(mse_total / pairs);
    result.best_step_log_loss = best_total / pairs;
    result.solved_strict = result.log_loss <= cfg.threshold_strict;
    result.solved_loose = result.log_loss <= cfg.threshold_loose;
    result.exact_match = all_exact;
    result.wall_time_seconds = model.wall_time_seconds;
    return result;
}

namespace {

bool solved_at(const TaskResult& r, double threshold) {
    return r.ok() && r.log_loss <= threshold;
}

std::set<std::string> task_set(const std::vector<TaskResult>& results) {
    std::set<std::string> ids;
    for (const auto& r : results) {
        ids.insert(r.task_id);
    }
    return ids;
}

}  // namespace

double union_solve(const ResultsByVariant& results, const std::vector<std::string>& members, double threshold) {
    if (members.empty()) {
        throw std::invalid_argument("union needs at least one member");
    }
    std::optional<std::set<std::string>> tasks;
    std::set<std::string> solved;
    for (const auto& name : members) {
        const auto it = results.find(name);
        if (it == results.end()) {
            throw std::invalid_argument("no results for variant " + name);
        }
        const auto ids = task_set(it->second);
        if (tasks && *tasks != ids) {
            throw std::invalid_argument("union members were evaluated on different task sets");
        }
        tasks = ids;
        for (const auto& r : it->second) {
            if (solved_at(r, threshold)) {
                solved.insert(r.task_id);
            }
        }
    }
    if (tasks->empty()) {
        return 0.0;
    }
    return static_cast<double>(solved.size()) / static_cast<double>(tasks->size());
}

double cost_per_task(double mean_wall_seconds, double power_watts, double price_per_kwh) {
    return mean_wall_seconds / 3600.0 * (power_watts / 1000.0) * price_per_kwh;
}

namespace {

ReportRow make_row(const ResultsByVariant& by_variant, const std::vector<std::string>& members, double threshold) {
    ReportRow row;
    row.members = members;
    row.is_union = members.size() > 1;
    for (const auto& m : members) {
        row.label += (row.label.empty() ? "" : " ∪ ") + m;
    }
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::set<std::string> tasks;
    std::set<std::string> exact;
    for (const auto& m : members) {
        for (const auto& r : by_variant.at(m)) {
            tasks.insert(r.task_id);
            if (r.ok()) {
                loss_sum += r.log_loss;
                ++loss_count;
                if (r.exact_match) {
                    exact.insert(r.task_id);
                }
            }
        }
    }
    row.tasks = tasks.size();
    row.mean_log_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.solve_rate = union_solve(by_variant, members, threshold);
    row.exact_match_rate = tasks.empty() ? 0.0 : static_cast<double>(exact.size()) / static_cast<double>(tasks.size());
    return row;
}

}  // namespace

RunReport summarize(const std::vector<TaskResult>& results, const std::vector<double>& thresholds,
                    const EvalConfig& cfg) {
    if (results.empty()) {
        throw std::invalid_argument("no results to summarize");
    }
    if (thresholds.empty()) {
        throw std::invalid_argument("at least one threshold is required");
    }
    ResultsByVariant by_variant;
    RunReport report;
    report.power_watts = cfg.power_watts;
    report.price_per_kwh = cfg.price_per_kwh;
    for (const auto& r : results) {
        by_variant[r.variant].push_back(r);
        if (!r.ok()) {
            ++report.failed_tasks;
        }
    }
    std::vector<std::string> names;
    for (const auto& [name, _] : by_variant) {
        names.push_back(name);
    }
    // Registry order first (NCA, v1, v2, ...), then anything else.
    const auto& registry = variant_names();
    std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
        const auto ia = std::find(registry.begin(), registry.end(), a) - registry.begin();
        const auto ib = std::find(registry.begin(), registry.end(), b) - registry.begin();
        return ia < ib;
    });

    auto same_tasks = [&](const std::vector<std::string>& members) {
        const auto first = task_set(by_variant.at(members.front()));
        return std::all_of(members.begin(), members.end(),
                           [&](const std::string& m) { return task_set(by_variant.at(m)) == first; });
    };
    std::vector<std::vector<std::string>> unions;
    for (std::size_t a = 0; a < names.size(); ++a) {
        for (std::size_t b = a + 1; b < names.size(); ++b) {
            if (same_tasks({names[a], names[b]})) {
                unions.push_back({names[a], names[b]});
            }
        }
    }
    const std::vector<std::string> four_way = {"NCA", "v1", "v3", "v4"};
    const bool has_four_way = std::all_of(four_way.begin(), four_way.end(), [&](const std::string& m) {
        return by_variant.count(m) > 0;
    });
    if (has_four_way && names != four_way && same_tasks(four_way)) {
        unions.push_back(four_way);
    }
    if (names.size() >= 3 && same_tasks(names)) {
        unions.push_back(names);
    }

    for (const double threshold : thresholds) {
        ThresholdBlock block{threshold, {}};
        for (const auto& name : names) {
            block.rows.push_back(make_row(by_variant, {name}, threshold));
        }
        for (const auto& members : unions) {
            block.rows.push_back(make_row(by_variant, members, threshold));
        }
        report.blocks.push_back(std::move(block));
    }

    for (const auto& name : names) {
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& r : by_variant.at(name)) {
            if (r.ok()) {
                total += r.wall_time_seconds;
                ++count;
            }
        }
        const double mean = count > 0 ? total / static_cast<double>(count) : 0.0;
        report.costs.push_back({name, mean, cost_per_task(mean, cfg.power_watts, cfg.price_per_kwh)});
    }
    return report;
}

std::vector<std::filesystem::path> export_frames(const std::vector<Lattice>& trajectory,
                                                 const std::filesystem::path& directory, int scale, bool gif) {
    if (trajectory.empty()) {
        throw std::invalid_argument("empty trajectory");
    }
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec || !std::filesystem::is_directory(directory)) {
        throw std::runtime_error("cannot create frame directory " + directory.string());
    }
    std::vector<std::filesystem::path> paths;
    std::vector<Image> frames;
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
        const auto path = directory / name;
        Image image = lattice_to_image(trajectory[i], scale);
        write_png(path, image);
        paths.push_back(path);
        if (gif) {
            frames.push_back(std::move(image));
        }
    }
    if (gif) {
        write_gif(directory / "rollout.gif", frames);
    }
    return paths;
}

}  // namespace arcnca
