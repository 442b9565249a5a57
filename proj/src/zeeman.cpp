#include "modr/zeeman.hpp"

#include <cmath>
#include <stdexcept>

namespace modr {

void ZeemanSystem::validate() const {
    if (!(nu0 > 0.0) || !(g_ground > 0.0) || !(g_excited > 0.0))
        throw std::invalid_argument("ZeemanSystem requires nu0, g_ground, g_excited > 0");
}

std::string_view transition_name(Transition t) {
    switch (t) {
    case Transition::MW_12: return "MW_12";
    case Transition::O_23: return "O_23";
    case Transition::O_13: return "O_13";
    case Transition::O_24: return "O_24";
    case Transition::O_14: return "O_14";
    }
    return "?";
}

Transition transition_from_name(std::string_view name) {
    if (name == "MW_12") return Transition::MW_12;
    if (name == "O_23") return Transition::O_23;
    if (name == "O_13") return Transition::O_13;
    if (name == "O_24") return Transition::O_24;
    if (name == "O_14") return Transition::O_14;
    throw std::invalid_argument("unknown transition id '" + std::string(name) + "'");
}

LevelEnergies level_energies(const ZeemanSystem& sys, const Quantity& field) {
    const double b = require(field, Dimension::MagneticFluxDensity, "level_energies");
    const double half_g = 0.5 * sys.g_ground * constants::bohr_magneton_hz_per_tesla * b;
    const double half_e = 0.5 * sys.g_excited * constants::bohr_magneton_hz_per_tesla * b;
    return {{-half_g, +half_g, sys.nu0 - half_e, sys.nu0 + half_e}};
}

double transition_frequency(const ZeemanSystem& sys, Transition t, const Quantity& field) {
    const auto lv = level_energies(sys, field).e_over_h;
    switch (t) {
    case Transition::MW_12: return lv[1] - lv[0];
    case Transition::O_23: return lv[2] - lv[1];
    case Transition::O_13: return lv[2] - lv[0];
    case Transition::O_24: return lv[3] - lv[1];
    case Transition::O_14: return lv[3] - lv[0];
    }
    return 0.0;
}

double transition_slope(const ZeemanSystem& sys, Transition t) {
    const double k = constants::bohr_magneton_hz_per_tesla;
    const double gg = sys.g_ground, ge = sys.g_excited;
    switch (t) {
    case Transition::MW_12: return gg * k;
    case Transition::O_23: return -0.5 * (gg + ge) * k;
    case Transition::O_13: return +0.5 * (gg - ge) * k;
    case Transition::O_24: return -0.5 * (gg - ge) * k;
    case Transition::O_14: return +0.5 * (gg + ge) * k;
    }
    return 0.0;
}

Quantity resonant_field(const ZeemanSystem& sys, Transition t, double target_hz) {
    const double slope = transition_slope(sys, t);
    const double offset = (t == Transition::MW_12) ? 0.0 : sys.nu0;
    if (slope == 0.0)
        throw std::domain_error("transition has zero field slope");
    const double b = (target_hz - offset) / slope;
    if (b < 0.0)
        throw std::domain_error("target " + std::to_string(target_hz) +
                                " Hz unreachable for " + std::string(transition_name(t)) +
                                " at B >= 0 (slope has the wrong sign)");
    return tesla(b);
}

ThermalState thermal_populations(const ZeemanSystem& sys, const Quantity& field,
                                 const Quantity& temperature) {
    const double temp = require(temperature, Dimension::Temperature, "thermal_populations");
    if (!(temp > 0.0))
        throw std::invalid_argument("temperature must be > 0 K");
    const double nu12 = transition_frequency(sys, Transition::MW_12, field);
    const double x = constants::planck * nu12 / (2.0 * constants::boltzmann * temp);
    const double diff = std::tanh(x);
    ThermalState st;
    st.temperature = temp;
    st.p1 = 0.5 * (1.0 + diff);
    st.p2 = 0.5 * (1.0 - diff);
    return st;
}

} // namespace modr
