#include "modr/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace modr {

std::string_view dimension_name(Dimension d) {
    switch (d) {
    case Dimension::Frequency: return "frequency";
    case Dimension::MagneticFluxDensity: return "magnetic-flux-density";
    case Dimension::Power: return "power";
    case Dimension::PowerDbm: return "power-log(dBm)";
    case Dimension::Temperature: return "temperature";
    case Dimension::Time: return "time";
    case Dimension::Length: return "length";
    case Dimension::Dimensionless: return "dimensionless";
    }
    return "?";
}

Quantity Quantity::operator+(const Quantity& o) const {
    if (dim != o.dim)
        throw dimension_error(std::string("cannot add ") + std::string(dimension_name(dim)) +
                              " and " + std::string(dimension_name(o.dim)));
    return {value + o.value, dim};
}

Quantity Quantity::operator-(const Quantity& o) const {
    if (dim != o.dim)
        throw dimension_error(std::string("cannot subtract ") + std::string(dimension_name(o.dim)) +
                              " from " + std::string(dimension_name(dim)));
    return {value - o.value, dim};
}

namespace {

struct UnitEntry {
    std::string_view symbol;
    Dimension dim;
    double scale;
};

// Longest symbols first so "mT" is not read as "m"+garbage.
constexpr std::array<UnitEntry, 16> unit_table{{
    {"dBm", Dimension::PowerDbm, 1.0},
    {"kHz", Dimension::Frequency, 1e3},
    {"MHz", Dimension::Frequency, 1e6},
    {"GHz", Dimension::Frequency, 1e9},
    {"THz", Dimension::Frequency, 1e12},
    {"ppm", Dimension::Dimensionless, 1e-6},
    {"Hz", Dimension::Frequency, 1.0},
    {"mT", Dimension::MagneticFluxDensity, 1e-3},
    {"mW", Dimension::Power, 1e-3},
    {"ms", Dimension::Time, 1e-3},
    {"mm", Dimension::Length, 1e-3},
    {"T", Dimension::MagneticFluxDensity, 1.0},
    {"W", Dimension::Power, 1.0},
    {"K", Dimension::Temperature, 1.0},
    {"s", Dimension::Time, 1.0},
    {"%", Dimension::Dimensionless, 1e-2},
}};

} // namespace

Quantity parse_quantity(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size())
        throw parse_error(parse_error::Kind::EmptyInput, i, "empty quantity");

    const char* begin = text.data() + i;
    const char* end = text.data() + text.size();
    double value = 0.0;
    auto [num_end, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || num_end == begin)
        throw parse_error(parse_error::Kind::MalformedNumber, i,
                          "malformed number in quantity '" + std::string(text) + "'");

    std::size_t j = static_cast<std::size_t>(num_end - text.data());
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t unit_begin = j;
    std::size_t unit_end = text.size();
    while (unit_end > unit_begin && std::isspace(static_cast<unsigned char>(text[unit_end - 1])))
        --unit_end;
    std::string_view unit = text.substr(unit_begin, unit_end - unit_begin);

    if (unit.empty())
        return {value, Dimension::Dimensionless};
    for (const auto& e : unit_table) {
        if (unit == e.symbol)
            return {value * e.scale, e.dim};
    }
    throw parse_error(parse_error::Kind::UnknownUnit, unit_begin,
                      "unknown unit '" + std::string(unit) + "'");
}

std::string format_quantity(const Quantity& q) {
    char buf[48];
    const char* unit = "";
    double v = q.value;
    switch (q.dim) {
    case Dimension::Frequency: unit = "Hz"; break;
    case Dimension::MagneticFluxDensity: unit = "T"; break;
    case Dimension::Power: unit = "W"; break;
    case Dimension::PowerDbm: unit = "dBm"; break;
    case Dimension::Temperature: unit = "K"; break;
    case Dimension::Time: unit = "s"; break;
    case Dimension::Length:
        unit = "mm";
        v *= 1e3;
        break;
    case Dimension::Dimensionless: unit = ""; break;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string out(buf);
    if (*unit) {
        out += ' ';
        out += unit;
    }
    return out;
}

Quantity dbm_to_watts(const Quantity& p) {
    if (p.dim != Dimension::PowerDbm)
        throw dimension_error("dbm_to_watts expects a dBm quantity");
    return watts(1e-3 * std::pow(10.0, p.value / 10.0));
}

Quantity watts_to_dbm(const Quantity& p) {
    if (p.dim != Dimension::Power)
        throw dimension_error("watts_to_dbm expects a linear power");
    return dbm(10.0 * std::log10(p.value / 1e-3));
}

Quantity apply_attenuation(const Quantity& p, double loss_db) {
    if (p.dim != Dimension::Power)
        throw dimension_error("apply_attenuation expects a linear power");
    if (loss_db < 0.0)
        throw std::invalid_argument("attenuation must be >= 0 dB");
    return watts(p.value * std::pow(10.0, -loss_db / 10.0));
}

double require(const Quantity& q, Dimension d, std::string_view context) {
    if (q.dim != d)
        throw dimension_error(std::string(context) + ": expected " +
                              std::string(dimension_name(d)) + ", got " +
                              std::string(dimension_name(q.dim)));
    return q.value;
}

} // namespace modr
