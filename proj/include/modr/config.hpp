#pragma once

#include "modr/cavity.hpp"
#include "modr/ensemble.hpp"
#include "modr/lock_chain.hpp"
#include "modr/units.hpp"
#include "modr/zeeman.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace modr {

class config_error : public std::runtime_error {
  public:
    config_error(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error("config line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + what),
          line(line), column(column) {}

    std::size_t line;
    std::size_t column;
};

/// One fully-resolved parameter set. Every field has a default; an empty
/// config file is valid. Unknown keys are hard errors.
struct Scenario {
    std::string id = "default";
    std::uint64_t seed = 20260809ull;
    double noise = 0.01; // additive Gaussian, relative to the peak |observable|

    ZeemanSystem sys;

    // ensemble
    double mw_fwhm = 47.8e6;       // spin-line inhomogeneous FWHM
    double optical_fwhm = 150e6;   // optical-line inhomogeneous FWHM (free parameter)
    std::uint64_t packets = 4096;
    double gamma_spin = 100e3;     // homogeneous FWHM, spin transition (free parameter)
    double gamma_optical = 1e3;    // homogeneous FWHM, optical transition (free parameter)
    double g_optical = 4.45e9;     // collective optical coupling at full polarization
    double g_mw = 8.5e6;           // collective microwave coupling at full polarization

    RateParams rates;

    CavityMode optical_mode{195112.7e9, 1.32e6, 1.32e6, Polarization::TE, 15000};
    CavityMode mw_mode{12.155e9, 1e6, 1e6, Polarization::MW, 0};

    DiscriminatorConfig pdh;    // optical lock
    DiscriminatorConfig pound;  // microwave readout
    ServoConfig servo;
    AMDrive drive;

    // scan axes and environment
    Transition transition = Transition::O_24;
    Quantity temperature = kelvin(4.0);
    double field_start = 60e-3, field_stop = 90e-3;
    std::uint64_t field_points = 161;
    double laser_start = -3e9, laser_stop = 3e9; // offsets from the optical mode
    std::uint64_t laser_points = 401;
    double mw_start = 12.119e9, mw_stop = 12.191e9;
    std::uint64_t mw_points = 25;
    Quantity power_start = dbm(-15.0), power_stop = dbm(15.0);
    std::uint64_t power_points = 31;
    Quantity optical_power = watts(2.3e-3); // pump for the anticrossing map
    Quantity fsr_radius = meters(2.1e-3);   // disk radius for the dispersion analysis

    /// Spin-line packets (pumped transition), detunings + gamma_spin.
    std::vector<SpinPacket> spin_packets() const;
    /// Optical-line coupling: packets + g_optical.
    EnsembleCoupling optical_coupling() const;
    /// Microwave-line coupling: packets + g_mw.
    EnsembleCoupling mw_coupling() const;
    OdmrSetup odmr_setup() const;
};

/// Parses the `[section]` / `key = value` grammar. Values are bare numbers,
/// booleans, or double-quoted quantities run through parse_quantity. Unknown
/// keys, duplicate keys and dimension mismatches carry line/column positions.
Scenario parse_config(const std::string& text);

} // namespace modr
