#pragma once

#include "modr/ensemble.hpp"
#include "modr/scan.hpp"
#include "modr/units.hpp"
#include "modr/zeeman.hpp"

#include <complex>
#include <string_view>
#include <vector>

namespace modr {

enum class Polarization { TE, TM, MW };

std::string_view polarization_name(Polarization p);
Polarization polarization_from_name(std::string_view name);

/// One resonator mode in the single-port input-output model. Linewidths are
/// FWHM in Hz; the same shape serves the optical WGMs and the microwave mode.
struct CavityMode {
    double nu_c = 0.0;       // resonance frequency, Hz
    double kappa_int = 1e6;  // intrinsic FWHM, Hz
    double kappa_ext = 1e6;  // extrinsic (coupling) FWHM, Hz
    Polarization polarization = Polarization::TE;
    int m_index = 0; // azimuthal mode number, 0 = unknown

    double kappa_total() const { return kappa_int + kappa_ext; }
    void validate() const;
};

double linewidth_to_q(double nu_c, double kappa_int);

/// Single-port reflection amplitude at laser detuning `delta_laser` from nu_c.
/// `ensemble_offset` is (profile center - nu_c); the self-energy is evaluated
/// at the probe's detuning from the profile center. Unity far off resonance.
std::complex<double> reflection(const CavityMode& mode, const EnsembleCoupling& coupling,
                                double ensemble_offset, double delta_laser);

/// |r|^2 of the bare mode (no ensemble).
std::complex<double> reflection_bare(const CavityMode& mode, double delta_laser);

/// 1 - |r(0)|^2 of the bare mode.
double coupling_contrast(const CavityMode& mode);

struct PolaritonBranch {
    double frequency = 0.0;      // Hz, absolute
    double linewidth = 0.0;      // Hz, FWHM, first-order perturbative
    double photon_fraction = 0.0; // in [0,1]
};

struct PolaritonBranches {
    std::vector<PolaritonBranch> branches; // sorted ascending in frequency
};

/// All N+1 real roots of the coupled cavity-ensemble characteristic function
/// (kappa, gamma -> 0), with photon fractions from the eigenvector weight on
/// the cavity coordinate. Throws modr::numeric_error on non-convergence.
PolaritonBranches polariton_frequencies(const CavityMode& mode,
                                        const EnsembleCoupling& coupling,
                                        double ensemble_offset);

struct LockedBranch {
    double frequency = 0.0;       // Hz, absolute
    double photon_fraction = 0.0;
    double dfreq_dg2 = 0.0;       // d(branch)/d(g_total^2), 1/Hz
};

/// The branch adiabatically connected to the bare cavity (the root of the
/// characteristic function in the pole interval containing nu_c). This is the
/// branch a laser lock follows.
LockedBranch locked_branch(const CavityMode& mode, const EnsembleCoupling& coupling,
                           double ensemble_offset);

class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

struct OpticalDrive {
    Quantity power = watts(0.0); // at the prism, after path losses
    RateParams rates;
};

/// |r|^2 over a (field, laser detuning) grid for one optical mode crossing one
/// optical transition. Per-field packet populations combine the thermal
/// ground-doublet difference with steady-state optical saturation; the pump is
/// taken at the mode frequency (steady-state, sweep-direction independent).
ScanResult anticrossing_map(const CavityMode& mode, const ZeemanSystem& sys,
                            Transition transition, const EnsembleCoupling& coupling,
                            const std::vector<double>& field_grid,
                            const std::vector<double>& laser_offset_grid,
                            const Quantity& temperature, const OpticalDrive& drive);

/// Dispersive pull of the microwave mode vs field: -Im Sigma at the mode
/// frequency, with the spin ensemble centered on nu12(B) and thermally
/// polarized at `temperature`. The raw EPR curve before the lock chain.
ScanResult microwave_pull_sweep(const CavityMode& mw_mode, const ZeemanSystem& sys,
                                const EnsembleCoupling& coupling,
                                const std::vector<double>& field_grid,
                                const Quantity& temperature);

} // namespace modr
