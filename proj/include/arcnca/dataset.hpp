#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace arcnca {

constexpr int kMaxGridSide = 30;
constexpr int kRawColors = 10;
constexpr int kPadColor = 10;

/// Thrown for malformed or out-of-domain task files.
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major 2D grid of color indices.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, int fill = 0);

    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int size() const { return height_ * width_; }

    [[nodiscard]] int at(int row, int col) const { return cells_[index(row, col)]; }
    void set(int row, int col, int value) { cells_[index(row, col)] = static_cast<std::uint8_t>(value); }

    [[nodiscard]] const std::vector<std::uint8_t>& cells() const { return cells_; }
    [[nodiscard]] int max_value() const;

    bool operator==(const Grid&) const = default;

    /// Builds a grid from nested rows; every row must have the same length.
    static Grid from_rows(const std::vector<std::vector<int>>& rows);

private:
    [[nodiscard]] std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> cells_;
};

struct GridPair {
    Grid input;
    Grid output;
};

struct TaskRecord {
    std::string task_id;
    std::vector<GridPair> train_pairs;
    std::vector<GridPair> test_pairs;
    bool size_changing = false;
    bool padded = false;
};

enum class PaddingMode { ignore_resizing, maximal_padding };

struct PaddingPolicy {
    PaddingMode mode = PaddingMode::ignore_resizing;
    int pad_value = kPadColor;
    int pad_rows = kMaxGridSide;
    int pad_cols = kMaxGridSide;
};

/// True iff any train or test pair changes dimensions.
[[nodiscard]] bool compute_size_changing(const TaskRecord& task);

/// Parses a task from ARC JSON text. Throws DatasetError.
[[nodiscard]] TaskRecord parse_task(const std::string& json_text, std::string task_id);

/// Loads one ARC task file; task_id is the file stem. Throws DatasetError.
[[nodiscard]] TaskRecord load_task(const std::filesystem::path& path);

/// Loads every *.json file in a flat directory, sorted by task_id.
[[nodiscard]] std::vector<TaskRecord> load_directory(const std::filesystem::path& dir);

/// Keeps tasks whose grids never change size; order is preserved.
[[nodiscard]] std::vector<TaskRecord> filter_same_size(const std::vector<TaskRecord>& tasks);

/// Embeds a grid at offset (0,0) of a pad_rows x pad_cols grid filled with pad_value.
[[nodiscard]] Grid pad_grid(const Grid& grid, const PaddingPolicy& policy);

/// Pads every grid of the task; the result is never size changing.
[[nodiscard]] TaskRecord apply_max_padding(const TaskRecord& task, const PaddingPolicy& policy);

/// Writes a task back to ARC JSON (used by tests and tooling).
[[nodiscard]] std::string task_to_json(const TaskRecord& task);

}  // namespace arcnca
