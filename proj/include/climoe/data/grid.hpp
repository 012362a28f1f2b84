#pragma once

#include <cstddef>
#include <string>

#include "climoe/error.hpp"

namespace climoe::data {

// Regular lat/lon-aligned grid. Row 0 is the northern edge, column 0 the
// western edge; cells are stored row-major.
struct GridSpec {
    std::size_t rows = 100;
    std::size_t cols = 100;
    double spacing_km = 3.0;
    double lat_min = 24.5;
    double lat_max = 31.0;
    double lon_min = -87.0;
    double lon_max = -80.0;
    int vertical_levels = 50;

    std::size_t cell_count() const { return rows * cols; }
    std::size_t cell_index(std::size_t row, std::size_t col) const { return row * cols + col; }

    double cell_lat(std::size_t row) const {
        return lat_max - (static_cast<double>(row) + 0.5) * (lat_max - lat_min) / static_cast<double>(rows);
    }
    double cell_lon(std::size_t col) const {
        return lon_min + (static_cast<double>(col) + 0.5) * (lon_max - lon_min) / static_cast<double>(cols);
    }

    void validate() const {
        if (rows == 0 || cols == 0) throw SchemaError("grid: rows and cols must be positive");
        if (!(spacing_km > 0.0)) throw SchemaError("grid: spacing_km must be positive");
        if (!(lat_min < lat_max)) throw SchemaError("grid: lat_min must be below lat_max");
        if (!(lon_min < lon_max)) throw SchemaError("grid: lon_min must be below lon_max");
    }

    bool operator==(const GridSpec&) const = default;
};

}  // namespace climoe::data
