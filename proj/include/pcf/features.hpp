#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pcf {

/// Dense row-major feature matrix.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

    void append_row(std::span<const double> r) {
        if (rows == 0 && data.empty()) cols = r.size();
        if (r.size() != cols) throw std::invalid_argument("FeatureMatrix: row width mismatch");
        data.insert(data.end(), r.begin(), r.end());
        ++rows;
    }
};

}  // namespace pcf
