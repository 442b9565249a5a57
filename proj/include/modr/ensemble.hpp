#pragma once

#include "modr/units.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace modr {

/// Gaussian inhomogeneous spectral density. `center` is the absolute frequency
/// origin; packet detunings are measured from it.
struct InhomProfile {
    double center = 0.0; // Hz
    double fwhm = 47.8e6; // Hz

    double sigma() const;
    void validate() const;
};

struct SpinPacket {
    double detuning = 0.0; // Hz, from profile center
    double weight = 1.0;   // sum over packets = 1
    double pop_diff = 1.0; // population difference across the probed transition
    double gamma_h = 1e5;  // homogeneous FWHM, Hz
};

/// Inverse standard normal CDF, |rel err| < 1e-14 over (0,1).
double inverse_normal_cdf(double p);

/// Splits the profile into n equal-probability packets placed at the
/// probability midpoints of their bins. The list is symmetric by construction
/// (sum of weight*detuning is exactly zero). pop_diff starts at 1.
std::vector<SpinPacket> discretize(const InhomProfile& profile, std::size_t n,
                                   double gamma_h);

/// Collective ensemble coupling. g_total is the collective coupling at full
/// polarization in cyclic frequency units (g/2pi); the per-packet coupling is
/// g_k^2 = g_total^2 * weight_k * pop_diff_k.
struct EnsembleCoupling {
    double g_total = 0.0; // Hz
    std::vector<SpinPacket> packets;
};

/// Sum_k g_k^2 / (i (delta - delta_k) + gamma_k/2). `delta` is the probe
/// detuning from the profile center; all rates cyclic (Hz). The real part is
/// absorption; -imag is the dispersive frequency pull.
std::complex<double> self_energy(const EnsembleCoupling& coupling, double delta);

double dispersive_pull(const EnsembleCoupling& coupling, double delta);

/// Relaxation and pumping constants of the rate-equation model. Neither value
/// is constrained by published data; both are scenario parameters.
struct RateParams {
    double t1 = 0.05;                // s
    double pump_rate_per_watt = 8.3e7; // 1/(s W) at line center

    double p_sat_eff() const { return 1.0 / (pump_rate_per_watt * t1); }
    void validate() const;
};

/// Unit-peak Lorentzian of FWHM gamma at detuning delta.
double lorentzian_peak1(double delta, double gamma);

/// Steady-state population difference under a drive of linear power p_drive
/// detuned by `detuning` from the packet: s = thermal_diff / (1 + (P/Psat) L).
double steady_state_saturation(const RateParams& params, const Quantity& p_drive,
                               double detuning, double gamma_h, double thermal_diff);

struct AmResponse {
    std::complex<double> amplitude; // first-harmonic complex amplitude of s
    double tau_eff;                 // s
};

/// Linearized response of the population difference to sinusoidal amplitude
/// modulation of the drive power: depth * (ds/dln p) / (1 + i 2 pi f tau_eff).
/// The amplitude carries the sign of ds/dln p (negative: s drops when p
/// rises); arg of (1 + i w tau)^-1 is the population lag.
AmResponse am_population_response(const RateParams& params, const Quantity& p0,
                                  double depth, double f_mod, double detuning,
                                  double gamma_h, double thermal_diff);

} // namespace modr
