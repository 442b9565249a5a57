#include "modr/csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace modr {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return i;
    throw io_error("CSV has no column named '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& n : names)
        if (n == name)
            return true;
    return false;
}

namespace {

void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out += buf;
}

} // namespace

std::string csv_from_scan(const ScanResult& scan) {
    scan.validate();
    std::string out;
    out += "# scenario: " + (scan.scenario_id.empty() ? "unnamed" : scan.scenario_id) + "\n";
    out += "# seed: " + std::to_string(scan.seed) + "\n";
    for (const auto& w : scan.warnings)
        out += "# warning: " + w + "\n";

    out += scan.axis1.name + "(" + scan.axis1.unit + ")";
    if (scan.axis2)
        out += "," + scan.axis2->name + "(" + scan.axis2->unit + ")";
    for (std::size_t c = 0; c < scan.value_names.size(); ++c)
        out += "," + scan.value_names[c] + "(" + scan.value_units[c] + ")";
    out += "\n";

    const std::size_t n2 = scan.axis2 ? scan.axis2->values.size() : 1;
    for (std::size_t i1 = 0; i1 < scan.axis1.values.size(); ++i1) {
        for (std::size_t i2 = 0; i2 < n2; ++i2) {
            append_number(out, scan.axis1.values[i1]);
            if (scan.axis2) {
                out += ',';
                append_number(out, scan.axis2->values[i2]);
            }
            const std::size_t idx = i1 * n2 + i2;
            for (const auto& col : scan.values) {
                out += ',';
                append_number(out, col[idx]);
            }
            out += '\n';
        }
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (!have_header) {
            for (auto& cell : cells) {
                const std::size_t open = cell.find('(');
                const std::size_t close = cell.rfind(')');
                if (open != std::string::npos && close != std::string::npos && close > open) {
                    t.names.push_back(cell.substr(0, open));
                    t.units.push_back(cell.substr(open + 1, close - open - 1));
                } else {
                    t.names.push_back(cell);
                    t.units.push_back("");
                }
            }
            t.columns.assign(t.names.size(), {});
            have_header = true;
            continue;
        }
        if (cells.size() != t.names.size())
            throw io_error("CSV row " + std::to_string(lineno) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(t.names.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(cells[c].c_str(), &end);
            if (end == cells[c].c_str())
                throw io_error("CSV row " + std::to_string(lineno) +
                               ": non-numeric cell '" + cells[c] + "'");
            t.columns[c].push_back(v);
        }
    }
    if (!have_header)
        throw io_error("CSV has no header row");
    return t;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable read_csv_file(const std::string& path) { return parse_csv(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw io_error("write to '" + path + "' failed");
}

} // namespace modr
