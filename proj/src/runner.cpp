#include "arcnca/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "arcnca/checkpoint.hpp"

namespace arcnca {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* padding_name(PaddingMode mode) {
    return mode == PaddingMode::maximal_padding ? "max" : "ignore";
}

PaddingMode padding_from(const std::string& name) {
    if (name == "max") {
        return PaddingMode::maximal_padding;
    }
    if (name == "ignore") {
        return PaddingMode::ignore_resizing;
    }
    throw ConfigError("padding must be \"ignore\" or \"max\", got \"" + name + "\"");
}

json range_json(ChannelRange r) {
    return json::array({r.begin, r.end});
}

ChannelRange range_from(const json& j) {
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int registry_rank(const std::string& name) {
    const auto& names = variant_names();
    return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
}

}  // namespace

void RunManifest::validate() const {
    if (variants.empty()) {
        throw ConfigError("no variants requested");
    }
    for (const auto& v : variants) {
        try {
            (void)variant_spec(v);
        } catch (const UnknownVariant& e) {
            throw ConfigError(e.what());
        }
    }
    if (workers < 1) {
        throw ConfigError("workers must be >= 1");
    }
    if (thresholds.empty()) {
        throw ConfigError("at least one threshold is required");
    }
    if (!(variant_options.fire_rate > 0.0 && variant_options.fire_rate <= 1.0)) {
        throw ConfigError("fire rate must lie in (0, 1]");
    }
    try {
        train.validate();
        eval.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (dataset.empty() || !fs::is_directory(dataset)) {
        throw ConfigError("dataset directory not found: " + dataset.string());
    }
    if (output.empty()) {
        throw ConfigError("output directory is required");
    }
}

json to_json(const RunManifest& m) {
    const auto& t = m.train;
    const auto& e = m.eval;
    return {
        {"toolkit_version", m.toolkit_version},
        {"global_seed", m.global_seed},
        {"variants", m.variants},
        {"dataset", m.dataset.string()},
        {"padding", padding_name(m.padding)},
        {"filter_padded", m.filter_padded},
        {"workers", m.workers},
        {"output", m.output.string()},
        {"thresholds", m.thresholds},
        {"variant_options",
         {{"fire_rate", m.variant_options.fire_rate},
          {"alive_masking", m.variant_options.alive_masking},
          {"public_channels", range_json(m.variant_options.partition.public_channels)},
          {"private_channels", range_json(m.variant_options.partition.private_channels)}}},
        {"train",
         {{"iterations", t.iterations},
          {"optimizer", "AdamW"},
          {"lr", t.lr},
          {"lr_drop_at", t.lr_drop_at},
          {"lr_drop_factor", t.lr_drop_factor},
          {"rollout_steps", json::array({t.rollout_min, t.rollout_max})},
          {"loss_channels", range_json(t.loss_channels)},
          {"patch_mix", t.patch_mix},
          {"patches_per_pair", t.patches_per_pair},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"weight_decay", t.weight_decay},
          {"adam_eps", t.adam_eps}}},
        {"eval",
         {{"threshold_strict", e.threshold_strict},
          {"threshold_loose", e.threshold_loose},
          {"log_base", "e"},
          {"max_eval_steps", e.max_eval_steps},
          {"stability_window", e.stability_window},
          {"stability_epsilon", e.stability_epsilon},
          {"stability_channels", range_json(e.stability_channels)},
          {"loss_channels", range_json(e.loss_channels)},
          {"power_watts", e.power_watts},
          {"price_per_kwh", e.price_per_kwh}}},
    };
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    try {
        m.toolkit_version = j.value("toolkit_version", std::string(kToolkitVersion));
        m.global_seed = j.at("global_seed").get<std::uint64_t>();
        m.variants = j.at("variants").get<std::vector<std::string>>();
        m.dataset = j.at("dataset").get<std::string>();
        m.padding = padding_from(j.at("padding").get<std::string>());
        m.filter_padded = j.value("filter_padded", false);
        m.workers = j.value("workers", 1);
        m.output = j.at("output").get<std::string>();
        m.thresholds = j.at("thresholds").get<std::vector<double>>();
        const auto& vo = j.at("variant_options");
        m.variant_options.fire_rate = vo.at("fire_rate").get<double>();
        m.variant_options.alive_masking = vo.at("alive_masking").get<bool>();
        m.variant_options.partition.public_channels = range_from(vo.at("public_channels"));
        m.variant_options.partition.private_channels = range_from(vo.at("private_channels"));
        const auto& t = j.at("train");
        m.train.iterations = t.at("iterations").get<int>();
        m.train.lr = t.at("lr").get<double>();
        m.train.lr_drop_at = t.at("lr_drop_at").get<int>();
        m.train.lr_drop_factor = t.at("lr_drop_factor").get<double>();
        m.train.rollout_min = t.at("rollout_steps").at(0).get<int>();
        m.train.rollout_max = t.at("rollout_steps").at(1).get<int>();
        m.train.loss_channels = range_from(t.at("loss_channels"));
        m.train.patch_mix = t.at("patch_mix").get<double>();
        m.train.patches_per_pair = t.at("patches_per_pair").get<int>();
        m.train.beta1 = t.at("beta1").get<double>();
        m.train.beta2 = t.at("beta2").get<double>();
        m.train.weight_decay = t.at("weight_decay").get<double>();
        m.train.adam_eps = t.at("adam_eps").get<double>();
        const auto& e = j.at("eval");
        m.eval.threshold_strict = e.at("threshold_strict").get<double>();
        m.eval.threshold_loose = e.at("threshold_loose").get<double>();
        m.eval.max_eval_steps = e.at("max_eval_steps").get<int>();
        m.eval.stability_window = e.at("stability_window").get<int>();
        m.eval.stability_epsilon = e.at("stability_epsilon").get<double>();
        m.eval.stability_channels = range_from(e.at("stability_channels"));
        m.eval.loss_channels = range_from(e.at("loss_channels"));
        m.eval.power_watts = e.at("power_watts").get<double>();
        m.eval.price_per_kwh = e.at("price_per_kwh").get<double>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("invalid manifest: ") + ex.what());
    }
    return m;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << contents;
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void set_iterations(TrainConfig& cfg, int iterations) {
    cfg.iterations = iterations;
    cfg.lr_drop_at = static_cast<int>(std::lround(iterations * 2.0 / 3.0));
}

std::vector<TaskRecord> prepare_tasks(const std::vector<TaskRecord>& raw, const RunManifest& manifest,
                                      const VariantSpec& variant) {
    const bool padded = manifest.padding == PaddingMode::maximal_padding || variant.padded;
    std::vector<TaskRecord> tasks;
    if (!padded) {
        tasks = filter_same_size(raw);
    } else {
        const auto source = manifest.filter_padded ? filter_same_size(raw) : raw;
        PaddingPolicy policy;
        policy.mode = PaddingMode::maximal_padding;
        for (const auto& t : source) {
            tasks.push_back(apply_max_padding(t, policy));
        }
    }
    std::sort(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
    return tasks;
}

namespace {

struct Job {
    const TaskRecord* task;
    VariantSpec variant;
};

fs::path result_path(const fs::path& out, const std::string& variant, const std::string& task_id) {
    return out / "results" / variant / (task_id + ".json");
}

TaskResult run_job(const Job& job, const RunManifest& m) {
    const auto& task = *job.task;
    TrainConfig cfg = m.train;
    cfg.seed = task_seed(m.global_seed, task.task_id);

    TrainedModel trained = train_task(task, job.variant, cfg, m.variant_options);

    const auto ckpt_path = m.output / "checkpoints" / job.variant.name / (task.task_id + ".ckpt");
    fs::create_directories(ckpt_path.parent_path());
    fs::path ckpt_tmp = ckpt_path;
    ckpt_tmp += ".tmp";
    save_checkpoint(ckpt_tmp, make_checkpoint(trained.variant, cfg.seed, cfg.iterations, m.variant_options, task.padded));
    fs::rename(ckpt_tmp, ckpt_path);

    std::ostringstream log;
    for (const auto& e : trained.train_log) {
        log << json{{"iter", e.iteration}, {"loss", e.loss}, {"log_loss", e.log_loss}, {"lr", e.lr},
                    {"wall_ms", e.wall_ms}}
                   .dump()
            << "\n";
    }
    write_file_atomic(m.output / "logs" / job.variant.name / (task.task_id + ".jsonl"), log.str());

    Rng eval_rng(cfg.seed ^ 0x5EED5EED5EED5EEDULL);
    const auto eval_start = std::chrono::steady_clock::now();
    TaskResult result = score_task(trained, task, m.eval, eval_rng);
    result.wall_time_seconds =
        trained.wall_time_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - eval_start).count();
    return result;
}

void write_results_jsonl(const fs::path& out) {
    std::ostringstream lines;
    for (const auto& r : read_results(out)) {
        lines << to_json(r).dump() << "\n";
    }
    write_file_atomic(out / "results.jsonl", lines.str());
}

}  // namespace

int cmd_solve(const RunManifest& manifest, bool force, std::ostream& log) {
    manifest.validate();
    fs::create_directories(manifest.output);
    write_file_atomic(manifest.output / "manifest.json", to_json(manifest).dump(2) + "\n");

    const auto raw = load_directory(manifest.dataset);
    std::vector<std::vector<TaskRecord>> prepared;
    std::vector<Job> jobs;
    prepared.reserve(manifest.variants.size());
    for (const auto& name : manifest.variants) {
        prepared.push_back(prepare_tasks(raw, manifest, variant_spec(name)));
    }
    for (std::size_t v = 0; v < manifest.variants.size(); ++v) {
        const auto spec = variant_spec(manifest.variants[v]);
        for (const auto& task : prepared[v]) {
            if (!force && fs::exists(result_path(manifest.output, spec.name, task.task_id))) {
                continue;
            }
            jobs.push_back({&task, spec});
        }
    }
    log << "arcnca " << manifest.toolkit_version << ": " << jobs.size() << " job(s) to run, "
        << manifest.workers << " worker(s)\n";

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& job = jobs[i];
            TaskResult result;
            try {
                result = run_job(job, manifest);
            } catch (const std::exception& e) {
                result = TaskResult{};
                result.task_id = job.task->task_id;
                result.variant = job.variant.name;
                result.status = "error";
                result.error = e.what();
            }
            write_file_atomic(result_path(manifest.output, job.variant.name, job.task->task_id),
                              to_json(result).dump() + "\n");
            std::lock_guard lock(log_mutex);
            log << "[" << job.variant.name << "] " << job.task->task_id;
            if (result.ok()) {
                log << " log_loss=" << result.log_loss << " strict=" << result.solved_strict
                    << " exact=" << result.exact_match << "\n";
            } else {
                log << " error: " << result.error << "\n";
            }
        }
    };
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(manifest.workers), std::max<std::size_t>(1, jobs.size()));
    for (std::size_t w = 0; w + 1 < count; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    write_results_jsonl(manifest.output);
    if (!read_results(manifest.output).empty()) {
        (void)cmd_report(manifest.output, manifest.thresholds, manifest.eval);
    }
    return 0;
}

std::vector<TaskResult> read_results(const fs::path& run_dir) {
    std::vector<TaskResult> results;
    const auto root = run_dir / "results";
    if (!fs::is_directory(root)) {
        return results;
    }
    for (const auto& variant_dir : fs::directory_iterator(root)) {
        if (!variant_dir.is_directory()) {
            continue;
        }
        for (const auto& entry : fs::directory_iterator(variant_dir.path())) {
            if (entry.path().extension() == ".json") {
                results.push_back(task_result_from_json(json::parse(read_text(entry.path()))));
            }
        }
    }
    std::sort(results.begin(), results.end(), [](const TaskResult& a, const TaskResult& b) {
        const int ra = registry_rank(a.variant);
        const int rb = registry_rank(b.variant);
        if (ra != rb) {
            return ra < rb;
        }
        if (a.variant != b.variant) {
            return a.variant < b.variant;
        }
        return a.task_id < b.task_id;
    });
    return results;
}

std::string cmd_report(const fs::path& run_dir, const std::vector<double>& thresholds, const EvalConfig& cfg) {
    const auto results = read_results(run_dir);
    if (results.empty()) {
        throw ConfigError("no results found under " + run_dir.string());
    }
    const auto report = summarize(results, thresholds, cfg);
    const auto markdown = render_markdown(report);
    write_file_atomic(run_dir / "report.md", markdown);
    write_file_atomic(run_dir / "report.csv", render_csv(report));
    return markdown;
}

std::vector<fs::path> cmd_frames(const fs::path& checkpoint, const fs::path& task_path, const fs::path& out_dir,
                                 int steps, bool gif, int scale, std::uint64_t seed, bool use_train_input) {
    if (steps < 0) {
        throw ConfigError("steps must be >= 0");
    }
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const Variant variant = restore_variant(ckpt);
    TaskRecord task = load_task(task_path);
    if (ckpt.padded) {
        PaddingPolicy policy;
        policy.mode = PaddingMode::maximal_padding;
        task = apply_max_padding(task, policy);
    }
    const auto& pairs = use_train_input || task.test_pairs.empty() ? task.train_pairs : task.test_pairs;
    const Lattice start = encode_grid(pairs.front().input, palette_for(task.padded));
    Rng rng(seed);
    std::vector<Lattice> trajectory;
    (void)rollout(variant.model, start, steps, rng, &trajectory);
    return export_frames(trajectory, out_dir, scale, gif);
}

std::string cmd_dataset_stats(const fs::path& dataset) {
    const auto tasks = load_directory(dataset);
    const auto same = filter_same_size(tasks);
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    int largest = 0;
    for (const auto& t : tasks) {
        train_pairs += t.train_pairs.size();
        test_pairs += t.test_pairs.size();
        for (const auto* list : {&t.train_pairs, &t.test_pairs}) {
            for (const auto& p : *list) {
                largest = std::max({largest, p.input.height(), p.input.width(), p.output.height(), p.output.width()});
            }
        }
    }
    std::ostringstream out;
    out << "tasks: " << tasks.size() << "\n"
        << "same-size tasks: " << same.size() << "\n"
        << "size-changing tasks: " << tasks.size() - same.size() << "\n"
        << "train pairs: " << train_pairs << "\n"
        << "test pairs: " << test_pairs << "\n"
        << "largest grid side: " << largest << "\n";
    return out.str();
}

}  // namespace arcnca
