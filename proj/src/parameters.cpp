#include "arcnca/parameters.hpp"

#include <algorithm>
#include <stdexcept>

namespace arcnca {

std::size_t ParameterSet::add(std::string name, std::size_t size, double fill) {
    arrays_.push_back({std::move(name), std::vector<double>(size, fill)});
    return arrays_.size() - 1;
}

std::size_t ParameterSet::total_size() const {
    std::size_t total = 0;
    for (const auto& a : arrays_) {
        total += a.values.size();
    }
    return total;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < arrays_.size(); ++i) {
        if (arrays_[i].name == name) {
            return i;
        }
    }
    throw std::out_of_range("no parameter array named " + name);
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (const auto& a : arrays_) {
        out.add(a.name, a.values.size());
    }
    return out;
}

void ParameterSet::fill(double value) {
    for (auto& a : arrays_) {
        std::fill(a.values.begin(), a.values.end(), value);
    }
}

bool ParameterSet::operator==(const ParameterSet& other) const {
    if (arrays_.size() != other.arrays_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < arrays_.size(); ++i) {
        if (arrays_[i].name != other.arrays_[i].name || arrays_[i].values != other.arrays_[i].values) {
            return false;
        }
    }
    return true;
}

}  // namespace arcnca
