#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gpc {

/// A named, row-major input array holding `row_width` elements per fitness
/// case. Exactly one of `ints` / `floats` is populated.
struct HostArray {
    std::string name;
    bool is_float = false;
    std::size_t row_width = 1;
    std::vector<std::int32_t> ints;
    std::vector<double> floats;

    std::size_t size() const { return is_float ? floats.size() : ints.size(); }
    std::size_t rows() const { return row_width == 0 ? 0 : size() / row_width; }

    friend bool operator==(const HostArray&, const HostArray&) = default;
};

/// Copies `arrays`, extending each to `rows` rows by repeating its last row.
std::vector<HostArray> pad_rows(const std::vector<HostArray>& arrays, std::size_t rows);

} // namespace gpc
