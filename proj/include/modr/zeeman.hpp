#pragma once

#include "modr/units.hpp"

#include <array>
#include <string_view>

namespace modr {

/// Effective-g linear Zeeman model of the erbium ion: a ground Kramers doublet
/// |1>,|2> and an excited doublet |3>,|4> split symmetrically about the
/// zero-field optical transition frequency nu0.
struct ZeemanSystem {
    double nu0 = 195116.7e9;  // zero-field optical transition, Hz
    double g_ground = 11.52;  // effective g-factor, ground doublet
    double g_excited = 7.7;   // effective g-factor, excited doublet

    void validate() const;
};

/// The five transitions addressed by the two resonators: the microwave
/// ground-doublet transition and the four optical lines. Optical ids name the
/// level pair (|1>,|2> ground; |3>,|4> excited).
enum class Transition { MW_12, O_23, O_13, O_24, O_14 };

std::string_view transition_name(Transition t);
Transition transition_from_name(std::string_view name);

struct LevelEnergies {
    // E/h for levels |1>..|4>, Hz
    std::array<double, 4> e_over_h;
};

LevelEnergies level_energies(const ZeemanSystem& sys, const Quantity& field);

/// Transition frequency in Hz at field B (Tesla-tagged Quantity). Linear in B.
double transition_frequency(const ZeemanSystem& sys, Transition t, const Quantity& field);

/// dnu/dB in Hz/T. Signed; optical down-slope transitions are negative.
double transition_slope(const ZeemanSystem& sys, Transition t);

/// Inverts the linear model: the field at which `t` has frequency `target_hz`.
/// Throws std::domain_error when the target is unreachable at B >= 0.
Quantity resonant_field(const ZeemanSystem& sys, Transition t, double target_hz);

struct ThermalState {
    double temperature = 4.0; // K
    double p1 = 0.5;          // occupation of |1>
    double p2 = 0.5;          // occupation of |2>

    double population_difference() const { return p1 - p2; }
};

/// Boltzmann occupation of the ground doublet; the excited doublet is empty at
/// the temperatures of interest. p1 - p2 = tanh(h nu12 / 2 kB T).
ThermalState thermal_populations(const ZeemanSystem& sys, const Quantity& field,
                                 const Quantity& temperature);

} // namespace modr
