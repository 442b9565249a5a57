#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modr {

/// Physical dimension of a Quantity. dBm is kept as its own dimension so
/// that logarithmic powers never mix silently with linear ones.
enum class Dimension {
    Frequency,
    MagneticFluxDensity,
    Power,
    PowerDbm,
    Temperature,
    Time,
    Length,
    Dimensionless,
};

std::string_view dimension_name(Dimension d);

/// A unit-tagged scalar. Values are stored in base SI units (Hz, T, W, K, s, m),
/// except PowerDbm which stays in dBm until explicitly converted.
struct Quantity {
    double value = 0.0;
    Dimension dim = Dimension::Dimensionless;

    Quantity() = default;
    Quantity(double v, Dimension d) : value(v), dim(d) {}

    Quantity operator+(const Quantity& o) const;
    Quantity operator-(const Quantity& o) const;
    Quantity operator*(double s) const { return {value * s, dim}; }
    Quantity operator/(double s) const { return {value / s, dim}; }
};

inline Quantity hertz(double v) { return {v, Dimension::Frequency}; }
inline Quantity tesla(double v) { return {v, Dimension::MagneticFluxDensity}; }
inline Quantity watts(double v) { return {v, Dimension::Power}; }
inline Quantity dbm(double v) { return {v, Dimension::PowerDbm}; }
inline Quantity kelvin(double v) { return {v, Dimension::Temperature}; }
inline Quantity seconds(double v) { return {v, Dimension::Time}; }
inline Quantity meters(double v) { return {v, Dimension::Length}; }
inline Quantity scalar(double v) { return {v, Dimension::Dimensionless}; }

/// Thrown on dimension mismatches in Quantity arithmetic or typed accessors.
class dimension_error : public std::runtime_error {
  public:
    explicit dimension_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by parse_quantity. `offset` is the byte offset of the offending
/// character in the input.
class parse_error : public std::runtime_error {
  public:
    enum class Kind { EmptyInput, MalformedNumber, UnknownUnit };

    parse_error(Kind k, std::size_t offset, const std::string& what)
        : std::runtime_error(what), kind(k), offset(offset) {}

    Kind kind;
    std::size_t offset;
};

/// Parses "<decimal><ws?><unit>" with unit in
/// {Hz,kHz,MHz,GHz,THz,T,mT,W,mW,dBm,K,s,ms,mm,ppm,%,""}.
Quantity parse_quantity(std::string_view text);

/// Emits the canonical form accepted by parse_quantity; round-trips exactly.
std::string format_quantity(const Quantity& q);

Quantity dbm_to_watts(const Quantity& p);
Quantity watts_to_dbm(const Quantity& p);

/// Applies a loss of `loss_db` >= 0 decibels to a linear power.
Quantity apply_attenuation(const Quantity& p, double loss_db);

double require(const Quantity& q, Dimension d, std::string_view context);

namespace constants {
// CODATA 2018
inline constexpr double planck = 6.62607015e-34;         // J s (exact)
inline constexpr double bohr_magneton = 9.2740100783e-24; // J/T
inline constexpr double boltzmann = 1.380649e-23;        // J/K (exact)
inline constexpr double speed_of_light = 299792458.0;    // m/s (exact)

// muB/h = 13.9962 GHz/T; the slope unit of every Zeeman formula here.
inline constexpr double bohr_magneton_hz_per_tesla = bohr_magneton / planck;
} // namespace constants

} // namespace modr
