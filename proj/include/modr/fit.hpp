#pragma once

#include "modr/cavity.hpp"
#include "modr/units.hpp"

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace modr {

struct FitResult {
    std::vector<std::string> param_names;
    std::vector<double> params;
    std::vector<double> stderrs; // empty unless converged with full-rank Jacobian
    double residual_norm = 0.0;  // sqrt(sum of squared weighted residuals)
    int n_iter = 0;
    bool converged = false;
    std::string message;

    double param(std::string_view name) const;
    double stderr_of(std::string_view name) const;
};

struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma; // empty = unit weights
};

using ModelFn = std::function<double(double x, std::span<const double> p)>;

/// Residual-vector form of the minimizer, for models that are not plain
/// y(x) curves (e.g. stacked complex data).
using ResidualFn = std::function<std::vector<double>(std::span<const double> p)>;

/// Damped Gauss-Newton (Levenberg-Marquardt) with central-difference Jacobian
/// (relative step 1e-6). Stops on relative step < 1e-10 or relative cost
/// change < 1e-12; gives up after 200 iterations or on singular normal
/// equations. `sigma_supplied` controls whether stderrs are rescaled by the
/// reduced chi-square (they are when the caller gave no uncertainties).
FitResult lm_minimize(const ResidualFn& residuals, std::vector<std::string> names,
                      std::vector<double> p0, bool sigma_supplied);

FitResult least_squares(const ModelFn& model, std::vector<std::string> names,
                        std::vector<double> p0, const FitData& data);

// ---------------------------------------------------------------------------
// Model library
// ---------------------------------------------------------------------------

/// f(x) = -A (x-x0)/s^2 exp(-(x-x0)^2 / 2 s^2) + c
double gaussian_derivative_model(double x, double amplitude, double center, double sigma,
                                 double offset);

struct GaussianDerivativeFit {
    FitResult fit; // params: amplitude, center, sigma, offset
    double fwhm = 0.0;
    double fwhm_stderr = 0.0;
    double peak_to_peak = 0.0;         // 2 A e^{-1/2} / sigma
    double extremum_separation = 0.0;  // 2 sigma
};

/// Fits the derivative-of-a-Gaussian line shape. The data must bracket both
/// extrema. fwhm = 2 sqrt(2 ln 2) sigma.
GaussianDerivativeFit fit_gaussian_derivative(const FitData& data);

struct SaturationFit {
    FitResult fit; // params: dnu_max, p_sat (linear watts)
    bool decaying = false;
    double p_sat_watts = 0.0;
    double p_sat_dbm = 0.0;
};

/// Fits dnu(P) = dnu_max [1 - exp(-P/P_sat)] (rising) or
/// dnu(P) = dnu_max exp(-P/P_sat) (decaying). Orientation is detected from
/// the data unless forced. x must be linear power in watts.
SaturationFit fit_saturation(const FitData& data);
SaturationFit fit_saturation(const FitData& data, bool decaying);

struct ReflectionDipFit {
    FitResult fit;       // params: nu_c, kappa_int, kappa_ext
    FitResult swapped;   // the kappa_int <-> kappa_ext twin (identical |r|^2)
};

/// Fits |r(nu)|^2 of the single-port mode. Magnitude data cannot distinguish
/// under- from over-coupling, so both solutions are returned.
ReflectionDipFit fit_reflection_dip(const FitData& data);

/// Complex-reflection fit; the phase resolves the coupling ambiguity.
FitResult fit_reflection_dip_complex(const std::vector<double>& detuning,
                                     const std::vector<std::complex<double>>& r);

// ---------------------------------------------------------------------------
// Sideband spectroscopy and dispersion
// ---------------------------------------------------------------------------

struct SidebandSpectrum {
    double mod_freq = 0.0;            // EOM modulation frequency, Hz
    std::vector<double> laser;        // laser detuning grid, Hz
    std::vector<double> transmission; // composite spectrum
};

/// Synthesizes the composite transmission seen when the laser scans the
/// carrier dip of `carrier` while a sideband at +mod_freq probes `neighbor`
/// one FSR above. Dips coincide exactly when mod_freq equals the FSR.
SidebandSpectrum synthesize_sideband_spectrum(const CavityMode& carrier,
                                              const CavityMode& neighbor, double fsr,
                                              double mod_freq,
                                              const std::vector<double>& laser_grid,
                                              double sideband_weight = 0.5);

struct FsrEstimate {
    double fsr = 0.0;   // Hz
    double sigma = 0.0; // Hz, from the coincidence-metric curvature
};

/// Returns the modulation frequency at which carrier and sideband dips
/// coincide (deepest combined dip), refined by a parabola through the metric
/// minimum. Throws numeric_error when no interior minimum exists.
FsrEstimate extract_fsr_sideband(const std::vector<SidebandSpectrum>& family,
                                 double noise_rms = 0.0);

struct FsrRow {
    int m_offset = 0;    // m - m_ref
    double fsr = 0.0;    // Hz
    double sigma = 0.0;  // Hz
};

struct FsrTable {
    std::vector<FsrRow> rows; // consecutive m offsets, descending or ascending
    void validate() const;
};

struct GvdRow {
    int m_offset = 0;
    double delta_fsr = 0.0;   // FSR_m - FSR_{m-1}, Hz
    double fsr_mean = 0.0;    // (FSR_m + FSR_{m-1})/2, Hz
    double beta2 = 0.0;       // s^2/m
    double beta2_sigma = 0.0; // s^2/m
};

/// beta2(m) = -(FSR_m - FSR_{m-1}) / ((2 pi)^2 R mean^3), with the row
/// uncertainties propagated. One output row per consecutive input pair.
std::vector<GvdRow> gvd_from_fsrs(const FsrTable& table, const Quantity& radius);

} // namespace modr
