#include "modr/scan.hpp"

#include <stdexcept>

namespace modr {

void ScanResult::validate() const {
    if (value_names.size() != values.size() || value_units.size() != values.size())
        throw std::logic_error("ScanResult: value column metadata out of sync");
    for (const auto& col : values)
        if (col.size() != grid_size())
            throw std::logic_error("ScanResult: value count != product of axis lengths");
}

std::vector<double> linspace(double start, double stop, std::size_t n) {
    if (n == 0)
        return {};
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = start;
        return v;
    }
    const double step = (stop - start) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = start + step * static_cast<double>(i);
    v[n - 1] = stop;
    return v;
}

} // namespace modr
