#pragma once

#include "modr/scan.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace modr {

class io_error : public std::runtime_error {
  public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Parsed CSV sheet: `name(unit)` headers, `#` comment lines, numeric cells.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> names;
    std::vector<std::string> units;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    /// Column index by name; throws io_error when absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

/// Serializes a scan: axis columns first, then value columns, leading comment
/// lines carrying the scenario id and seed. Byte-deterministic.
std::string csv_from_scan(const ScanResult& scan);

CsvTable parse_csv(const std::string& text);

CsvTable read_csv_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace modr
