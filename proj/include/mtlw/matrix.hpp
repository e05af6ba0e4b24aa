#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mtlw/errors.hpp"

namespace mtlw {

/// Dense row-major 2-D array. Just enough surface for the toy networks and
/// label tables in this project; no linear-algebra library behind it.
template <class T>
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool same_shape(const Grid& other) const { return rows == other.rows && cols == other.cols; }

    void require_shape(std::size_t r, std::size_t c, const std::string& what) const {
        if (rows != r || cols != c) {
            throw DimensionError(what + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                                 ", got " + std::to_string(rows) + "x" + std::to_string(cols));
        }
    }
};

using Matrix = Grid<double>;
using LabelGrid = Grid<int>;

}  // namespace mtlw
