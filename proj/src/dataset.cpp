#include "arcnca/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace arcnca {

using nlohmann::json;

Grid::Grid(int height, int width, int fill)
    : height_(height), width_(width),
      cells_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), static_cast<std::uint8_t>(fill)) {
    if (height < 0 || width < 0) {
        throw DatasetError("negative grid dimension");
    }
}

int Grid::max_value() const {
    if (cells_.empty()) {
        return 0;
    }
    return *std::max_element(cells_.begin(), cells_.end());
}

Grid Grid::from_rows(const std::vector<std::vector<int>>& rows) {
    const int height = static_cast<int>(rows.size());
    const int width = height > 0 ? static_cast<int>(rows.front().size()) : 0;
    Grid grid(height, width);
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(rows[r].size()) != width) {
            throw DatasetError("ragged grid row " + std::to_string(r));
        }
        for (int c = 0; c < width; ++c) {
            grid.set(r, c, rows[r][c]);
        }
    }
    return grid;
}

bool compute_size_changing(const TaskRecord& task) {
    auto changes = [](const GridPair& p) {
        return p.input.height() != p.output.height() || p.input.width() != p.output.width();
    };
    return std::any_of(task.train_pairs.begin(), task.train_pairs.end(), changes) ||
           std::any_of(task.test_pairs.begin(), task.test_pairs.end(), changes);
}

namespace {

Grid parse_grid(const json& node, const std::string& where) {
    if (!node.is_array() || node.empty()) {
        throw DatasetError(where + ": grid must be a non-empty list of rows");
    }
    const auto height = static_cast<int>(node.size());
    if (height > kMaxGridSide) {
        throw DatasetError(where + ": dimension out of range (height " + std::to_string(height) + ")");
    }
    const auto& first = node.front();
    if (!first.is_array() || first.empty()) {
        throw DatasetError(where + ": grid rows must be non-empty lists");
    }
    const auto width = static_cast<int>(first.size());
    if (width > kMaxGridSide) {
        throw DatasetError(where + ": dimension out of range (width " + std::to_string(width) + ")");
    }
    Grid grid(height, width);
    for (int r = 0; r < height; ++r) {
        const auto& row = node[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != width) {
            throw DatasetError(where + ": ragged row " + std::to_string(r));
        }
        for (int c = 0; c < width; ++c) {
            const auto& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number_integer()) {
                throw DatasetError(where + ": non-integer cell");
            }
            const auto value = cell.get<long long>();
            if (value < 0 || value >= kRawColors) {
                throw DatasetError(where + ": value out of range (" + std::to_string(value) + ")");
            }
            grid.set(r, c, static_cast<int>(value));
        }
    }
    return grid;
}

std::vector<GridPair> parse_pairs(const json& root, const char* key) {
    if (!root.contains(key)) {
        throw DatasetError(std::string("missing key \"") + key + "\"");
    }
    const auto& list = root.at(key);
    if (!list.is_array()) {
        throw DatasetError(std::string("\"") + key + "\" must be a list");
    }
    std::vector<GridPair> pairs;
    pairs.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& item = list[i];
        const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
        if (!item.is_object() || !item.contains("input") || !item.contains("output")) {
            throw DatasetError(where + ": expected keys \"input\" and \"output\"");
        }
        pairs.push_back({parse_grid(item.at("input"), where + ".input"),
                         parse_grid(item.at("output"), where + ".output")});
    }
    return pairs;
}

json grid_to_json(const Grid& grid) {
    json rows = json::array();
    for (int r = 0; r < grid.height(); ++r) {
        json row = json::array();
        for (int c = 0; c < grid.width(); ++c) {
            row.push_back(grid.at(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TaskRecord parse_task(const std::string& json_text, std::string task_id) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DatasetError("parse failure: " + std::string(e.what()));
    }
    if (!root.is_object()) {
        throw DatasetError("parse failure: top level must be an object");
    }
    TaskRecord task;
    task.task_id = std::move(task_id);
    task.train_pairs = parse_pairs(root, "train");
    task.test_pairs = parse_pairs(root, "test");
    if (task.train_pairs.empty()) {
        throw DatasetError("task has no train pairs");
    }
    task.size_changing = compute_size_changing(task);
    return task;
}

TaskRecord load_task(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError("cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_task(buffer.str(), path.stem().string());
    } catch (const DatasetError& e) {
        throw DatasetError(path.filename().string() + ": " + e.what());
    }
}

std::vector<TaskRecord> load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DatasetError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.stem().string() < b.stem().string(); });
    std::vector<TaskRecord> tasks;
    tasks.reserve(files.size());
    for (const auto& f : files) {
        tasks.push_back(load_task(f));
    }
    return tasks;
}

std::vector<TaskRecord> filter_same_size(const std::vector<TaskRecord>& tasks) {
    std::vector<TaskRecord> kept;
    std::copy_if(tasks.begin(), tasks.end(), std::back_inserter(kept),
                 [](const TaskRecord& t) { return !t.size_changing; });
    return kept;
}

Grid pad_grid(const Grid& grid, const PaddingPolicy& policy) {
    if (grid.height() > policy.pad_rows || grid.width() > policy.pad_cols) {
        throw DatasetError("grid " + std::to_string(grid.height()) + "x" + std::to_string(grid.width()) +
                           " exceeds padding target");
    }
    Grid padded(policy.pad_rows, policy.pad_cols, policy.pad_value);
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            padded.set(r, c, grid.at(r, c));
        }
    }
    return padded;
}

TaskRecord apply_max_padding(const TaskRecord& task, const PaddingPolicy& policy) {
    if (policy.mode != PaddingMode::maximal_padding) {
        throw DatasetError("apply_max_padding requires maximal_padding mode");
    }
    auto pad_pairs = [&](const std::vector<GridPair>& pairs) {
        std::vector<GridPair> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
            out.push_back({pad_grid(p.input, policy), pad_grid(p.output, policy)});
        }
        return out;
    };
    TaskRecord padded;
    padded.task_id = task.task_id;
    padded.train_pairs = pad_pairs(task.train_pairs);
    padded.test_pairs = pad_pairs(task.test_pairs);
    padded.size_changing = compute_size_changing(padded);
    padded.padded = true;
    return padded;
}

std::string task_to_json(const TaskRecord& task) {
    auto pairs_to_json = [](const std::vector<GridPair>& pairs) {
        json list = json::array();
        for (const auto& p : pairs) {
            list.push_back({{"input", grid_to_json(p.input)}, {"output", grid_to_json(p.output)}});
        }
        return list;
    };
    json root = {{"train", pairs_to_json(task.train_pairs)}, {"test", pairs_to_json(task.test_pairs)}};
    return root.dump();
}

}  // namespace arcnca
