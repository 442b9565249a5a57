#pragma once

#include "modr/cavity.hpp"
#include "modr/ensemble.hpp"
#include "modr/scan.hpp"
#include "modr/units.hpp"
#include "modr/zeeman.hpp"

#include <complex>
#include <vector>

namespace modr {

enum class DiscriminatorKind { PdhOptical, PoundMicrowave };

struct DiscriminatorConfig {
    double mod_freq = 25e6;  // Hz
    double mod_depth = 1.08; // modulation index (rad); J0*J1 is near-maximal here
    DiscriminatorKind kind = DiscriminatorKind::PdhOptical;

    void validate() const;
};

/// Three-tone modulation discriminant built from the reflection amplitude:
/// E(delta) = J0 J1 Im[r(d) r*(d+W) - r*(d) r(d-W)]. Odd about a symmetric
/// resonance; zero at its center.
double pdh_error(const DiscriminatorConfig& cfg, const CavityMode& mode,
                 const EnsembleCoupling& coupling, double ensemble_offset, double delta);

/// Same discriminant on the bare mode (no ensemble term).
double pdh_error_bare(const DiscriminatorConfig& cfg, const CavityMode& mode, double delta);

/// Hz per error-signal unit: 1/(dE/ddelta) at the lock point. Throws
/// numeric_error when the slope vanishes.
double calibrate_slope(const DiscriminatorConfig& cfg, const CavityMode& mode,
                       const EnsembleCoupling& coupling, double ensemble_offset);
double calibrate_slope_bare(const DiscriminatorConfig& cfg, const CavityMode& mode);

struct ServoConfig {
    double unity_gain_bandwidth = 30.0;  // Hz; pure integrator crossing
    double input_lowpass_corner = 151.8; // Hz, first order

    void validate() const;
    /// Open-loop transmission L(i 2 pi f) = (UGB / i f) / (1 + i f / f_lp).
    std::complex<double> open_loop(double f) const;
    /// Residual error transfer 1/(1+L) at frequency f.
    std::complex<double> closed_loop_error_factor(double f) const;
};

enum class AmWaveform { Sine, Square };

struct AMDrive {
    double carrier_freq = 12.155e9;      // Hz
    Quantity power_in = dbm(5.0);        // at the cryostat input (dBm or W)
    double depth = 0.45;
    double mod_freq = 1e3;               // Hz
    double insertion_loss_db = 40.0;     // cryostat input -> resonator
    double field_enhancement = 1.0;      // microwave B-field factor in the optical mode volume
    AmWaveform waveform = AmWaveform::Sine;

    void validate() const;
    /// Mean drive power delivered to the addressed ions, W. Includes insertion
    /// loss, the cavity's Lorentzian buildup at (carrier - nu_mu0) and the
    /// field-enhancement factor squared.
    double power_at_ions(const CavityMode& mw_mode) const;
    /// Effective first-harmonic modulation depth (square waves drive the
    /// fundamental at 4/pi times their depth).
    double first_harmonic_depth() const;
};

struct LockInReading {
    double amplitude = 0.0; // error-signal excursion converted to Hz
    double phase = 0.0;     // degrees in (-180, 180]
};

double wrap_phase_deg(double deg);

/// Pound-locked EPR sweep: per-field spin populations saturated by the drive,
/// microwave mode pulled by the ensemble, pull read out through the bare-mode
/// discriminant and converted back to Hz with the calibrated slope.
/// Columns: mw_detuning (nu12(B) - carrier) and shift.
ScanResult epr_scan(const CavityMode& mw_mode, const ZeemanSystem& sys,
                    const EnsembleCoupling& coupling,
                    const DiscriminatorConfig& pound, const AMDrive& drive,
                    const RateParams& rates, const std::vector<double>& field_grid,
                    const Quantity& temperature);

/// Everything odmr_point needs. The optical coupling's pop_diff values are
/// overwritten per point with the thermal ground-state difference.
struct OdmrSetup {
    CavityMode optical_mode;
    CavityMode mw_mode;
    ZeemanSystem sys;
    Transition optical_transition = Transition::O_24;
    EnsembleCoupling optical;         // optical-line packets + g_total
    std::vector<SpinPacket> spin;     // spin-line packets (pumped transition)
    RateParams rates;
    ServoConfig servo;
    DiscriminatorConfig pdh;
    AMDrive drive;
    Quantity temperature = kelvin(4.0);
};

struct OdmrPointResult {
    LockInReading reading;
    double photon_fraction = 0.0;  // of the locked branch
    double branch_frequency = 0.0; // Hz
    double tau_eff = 0.0;          // response-weighted effective time constant, s
    std::complex<double> response; // signed complex branch-frequency excursion, Hz
};

/// Analytic ODMR chain: spin-line AM population response -> coupling
/// modulation -> polariton frequency modulation -> servo-attenuated error
/// excursion -> lock-in amplitude (Hz) and phase (population lag + servo).
OdmrPointResult odmr_point(const OdmrSetup& setup, const Quantity& field, double nu_mu);

/// odmr_point over a (field, drive frequency) grid; amplitude and phase planes.
ScanResult odmr_map(const OdmrSetup& setup, const std::vector<double>& field_grid,
                    const std::vector<double>& nu_mu_grid);

/// Demodulates x(t) at frequency f over the trailing whole periods:
/// returns the complex amplitude X with x(t) ~ Re[X exp(i 2 pi f t)].
std::complex<double> lock_in_demodulate(const std::vector<double>& series, double dt,
                                        double f, std::size_t n_periods);

struct TimeDomainResult {
    std::vector<double> error_hz; // sampled frequency-error series
    double dt = 0.0;
    std::complex<double> demod;   // complex first harmonic of the error series
    LockInReading reading;        // |demod| and its phase
};

/// Explicit time stepping of the pumped spin packets, the polariton root, the
/// servo integrator with its input low-pass, and a digital lock-in. Validates
/// the analytic odmr_point chain. dt must satisfy dt <= 1/(50 f_mod).
TimeDomainResult time_domain_oracle(const OdmrSetup& setup, const Quantity& field,
                                    double nu_mu, std::size_t settle_periods,
                                    std::size_t demod_periods, double dt);

} // namespace modr
