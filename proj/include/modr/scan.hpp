#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace modr {

struct Axis {
    std::string name;
    std::string unit; // parseable by the quantity grammar, may be empty
    std::vector<double> values;
};

/// Rectangular scan grid with one or more value columns. Row-major in axis2
/// (axis1 index varies slowest). The single exchange format between
/// simulation, fitting and I/O.
struct ScanResult {
    Axis axis1;
    std::optional<Axis> axis2;
    std::vector<std::string> value_names;
    std::vector<std::string> value_units;
    std::vector<std::vector<double>> values; // one column per value name

    std::string scenario_id;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t grid_size() const {
        return axis1.values.size() * (axis2 ? axis2->values.size() : 1);
    }
    std::size_t index(std::size_t i1, std::size_t i2 = 0) const {
        return axis2 ? i1 * axis2->values.size() + i2 : i1;
    }
    /// Throws std::logic_error if column count/lengths are inconsistent.
    void validate() const;
};

std::vector<double> linspace(double start, double stop, std::size_t n);

} // namespace modr
