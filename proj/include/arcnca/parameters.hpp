#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace arcnca {

struct ParamArray {
    std::string name;
    std::vector<double> values;
};

/// Ordered collection of named parameter arrays. Gradients use the same type.
class ParameterSet {
public:
    /// Appends an array and returns its index.
    std::size_t add(std::string name, std::size_t size, double fill = 0.0);

    [[nodiscard]] std::size_t count() const { return arrays_.size(); }
    [[nodiscard]] std::size_t total_size() const;

    [[nodiscard]] ParamArray& operator[](std::size_t i) { return arrays_[i]; }
    [[nodiscard]] const ParamArray& operator[](std::size_t i) const { return arrays_[i]; }

    /// Index of the named array; throws std::out_of_range when absent.
    [[nodiscard]] std::size_t index_of(const std::string& name) const;

    [[nodiscard]] ParameterSet zeros_like() const;
    void fill(double value);

    [[nodiscard]] auto begin() { return arrays_.begin(); }
    [[nodiscard]] auto end() { return arrays_.end(); }
    [[nodiscard]] auto begin() const { return arrays_.begin(); }
    [[nodiscard]] auto end() const { return arrays_.end(); }

    bool operator==(const ParameterSet& other) const;

private:
    std::vector<ParamArray> arrays_;
};

}  // namespace arcnca
