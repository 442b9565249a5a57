#include "modr/lock_chain.hpp"

#include "modr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modr {

void DiscriminatorConfig::validate() const {
    if (!(mod_freq > 0.0) || !(mod_depth > 0.0))
        throw std::invalid_argument("discriminator requires mod_freq > 0 and mod_depth > 0");
}

void ServoConfig::validate() const {
    if (!(unity_gain_bandwidth > 0.0) || !(input_lowpass_corner > 0.0))
        throw std::invalid_argument("servo requires positive bandwidth and corner");
}

std::complex<double> ServoConfig::open_loop(double f) const {
    const std::complex<double> integrator =
        unity_gain_bandwidth / std::complex<double>(0.0, f);
    const std::complex<double> lowpass =
        1.0 / std::complex<double>(1.0, f / input_lowpass_corner);
    return integrator * lowpass;
}

std::complex<double> ServoConfig::closed_loop_error_factor(double f) const {
    return 1.0 / (1.0 + open_loop(f));
}

void AMDrive::validate() const {
    if (depth < 0.0 || depth > 1.0)
        throw std::invalid_argument("AM depth must lie in [0,1]");
    if (!(mod_freq > 0.0))
        throw std::invalid_argument("AM modulation frequency must be > 0");
    if (insertion_loss_db < 0.0)
        throw std::invalid_argument("insertion loss must be >= 0 dB");
    if (!(field_enhancement > 0.0))
        throw std::invalid_argument("field enhancement must be > 0");
}

double AMDrive::power_at_ions(const CavityMode& mw_mode) const {
    validate();
    const Quantity lin =
        (power_in.dim == Dimension::PowerDbm) ? dbm_to_watts(power_in) : power_in;
    const double coupled = apply_attenuation(lin, insertion_loss_db).value;
    const double buildup = lorentzian_peak1(carrier_freq - mw_mode.nu_c,
                                            mw_mode.kappa_total());
    return coupled * buildup * field_enhancement * field_enhancement;
}

double AMDrive::first_harmonic_depth() const {
    return waveform == AmWaveform::Square ? depth * 4.0 / M_PI : depth;
}

double wrap_phase_deg(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d <= -180.0)
        d += 360.0;
    if (d > 180.0)
        d -= 360.0;
    return d;
}

// ---------------------------------------------------------------------------
// Discriminators
// ---------------------------------------------------------------------------

namespace {

double bessel_scale(const DiscriminatorConfig& cfg) {
    return std::cyl_bessel_j(0, cfg.mod_depth) * std::cyl_bessel_j(1, cfg.mod_depth);
}

double discriminant(const std::complex<double>& r0, const std::complex<double>& rp,
                    const std::complex<double>& rm, double scale) {
    return scale * (r0 * std::conj(rp) - std::conj(r0) * rm).imag();
}

} // namespace

double pdh_error(const DiscriminatorConfig& cfg, const CavityMode& mode,
                 const EnsembleCoupling& coupling, double ensemble_offset, double delta) {
    cfg.validate();
    const double w = cfg.mod_freq;
    return discriminant(reflection(mode, coupling, ensemble_offset, delta),
                        reflection(mode, coupling, ensemble_offset, delta + w),
                        reflection(mode, coupling, ensemble_offset, delta - w),
                        bessel_scale(cfg));
}

double pdh_error_bare(const DiscriminatorConfig& cfg, const CavityMode& mode, double delta) {
    cfg.validate();
    const double w = cfg.mod_freq;
    return discriminant(reflection_bare(mode, delta), reflection_bare(mode, delta + w),
                        reflection_bare(mode, delta - w), bessel_scale(cfg));
}

namespace {

double slope_from(const std::function<double(double)>& err, double h) {
    return (err(h) - err(-h)) / (2.0 * h);
}

double checked_calibration(double slope) {
    if (!(std::abs(slope) > 0.0) || !std::isfinite(1.0 / slope))
        throw numeric_error("discriminator slope vanishes at the lock point; "
                            "cannot calibrate");
    return 1.0 / slope;
}

} // namespace

double calibrate_slope(const DiscriminatorConfig& cfg, const CavityMode& mode,
                       const EnsembleCoupling& coupling, double ensemble_offset) {
    const double h = mode.kappa_total() / 1000.0;
    return checked_calibration(slope_from(
        [&](double d) { return pdh_error(cfg, mode, coupling, ensemble_offset, d); }, h));
}

double calibrate_slope_bare(const DiscriminatorConfig& cfg, const CavityMode& mode) {
    const double h = mode.kappa_total() / 1000.0;
    return checked_calibration(
        slope_from([&](double d) { return pdh_error_bare(cfg, mode, d); }, h));
}

// ---------------------------------------------------------------------------
// EPR
// ---------------------------------------------------------------------------

ScanResult epr_scan(const CavityMode& mw_mode, const ZeemanSystem& sys,
                    const EnsembleCoupling& coupling,
                    const DiscriminatorConfig& pound, const AMDrive& drive,
                    const RateParams& rates, const std::vector<double>& field_grid,
                    const Quantity& temperature) {
    mw_mode.validate();
    if (field_grid.empty())
        throw std::invalid_argument("epr_scan requires a non-empty field grid");

    // carrier power reaching the ions; the carrier doubles as the saturating pump
    const Quantity lin = (drive.power_in.dim == Dimension::PowerDbm)
                             ? dbm_to_watts(drive.power_in)
                             : drive.power_in;
    const double p_cav =
        apply_attenuation(lin, drive.insertion_loss_db).value *
        lorentzian_peak1(drive.carrier_freq - mw_mode.nu_c, mw_mode.kappa_total());
    const Quantity p_at_ions = watts(p_cav);

    const double lock_delta = drive.carrier_freq - mw_mode.nu_c;
    const double e0 = pdh_error_bare(pound, mw_mode, lock_delta);
    const double cal = checked_calibration(slope_from(
        [&](double d) { return pdh_error_bare(pound, mw_mode, lock_delta + d); },
        mw_mode.kappa_total() / 1000.0));

    ScanResult res;
    res.axis1 = {"field", "T", field_grid};
    res.value_names = {"mw_detuning", "shift"};
    res.value_units = {"Hz", "Hz"};
    res.values.assign(2, std::vector<double>(field_grid.size(), 0.0));

    parallel_for(field_grid.size(), [&](std::size_t bi) {
        const Quantity field = tesla(field_grid[bi]);
        const double nu12 = transition_frequency(sys, Transition::MW_12, field);
        const double s_th =
            thermal_populations(sys, field, temperature).population_difference();

        EnsembleCoupling local = coupling;
        for (auto& pk : local.packets) {
            const double det = drive.carrier_freq - nu12 - pk.detuning;
            pk.pop_diff = steady_state_saturation(rates, p_at_ions, det,
                                                  pk.gamma_h, s_th);
        }
        const double pull = dispersive_pull(local, mw_mode.nu_c - nu12);
        // the resonance moved by +pull, so the carrier sits at lock_delta - pull
        const double e = pdh_error_bare(pound, mw_mode, lock_delta - pull);
        res.values[0][bi] = nu12 - drive.carrier_freq;
        res.values[1][bi] = -(e - e0) * cal;
    });
    return res;
}

// ---------------------------------------------------------------------------
// ODMR
// ---------------------------------------------------------------------------

namespace {

struct ChainPoint {
    std::complex<double> ds; // complex ensemble-average population response
    double tau_eff = 0.0;    // response-weighted
};

ChainPoint spin_response(const OdmrSetup& setup, double nu12, double s_th, double nu_mu,
                         double p_ions) {
    ChainPoint out;
    const Quantity p = watts(p_ions);
    const double depth = setup.drive.first_harmonic_depth();
    double wsum = 0.0;
    for (const auto& pk : setup.spin) {
        const double det = nu_mu - nu12 - pk.detuning;
        const AmResponse r = am_population_response(setup.rates, p, depth,
                                                    setup.drive.mod_freq, det,
                                                    pk.gamma_h, s_th);
        out.ds += pk.weight * r.amplitude;
        const double wgt = pk.weight * std::abs(r.amplitude);
        out.tau_eff += wgt * r.tau_eff;
        wsum += wgt;
    }
    if (wsum > 0.0)
        out.tau_eff /= wsum;
    return out;
}

} // namespace

OdmrPointResult odmr_point(const OdmrSetup& setup, const Quantity& field, double nu_mu) {
    setup.servo.validate();
    const double nu12 = transition_frequency(setup.sys, Transition::MW_12, field);
    const double s_th =
        thermal_populations(setup.sys, field, setup.temperature).population_difference();

    AMDrive drv = setup.drive;
    drv.carrier_freq = nu_mu;
    const double p_ions = drv.power_at_ions(setup.mw_mode);

    // (1) first-harmonic population response, averaged over the spin line
    const ChainPoint pop = spin_response(setup, nu12, s_th, nu_mu, p_ions);

    // (2,3) coupling modulation and polariton frequency modulation
    const double center =
        transition_frequency(setup.sys, setup.optical_transition, field);
    const double offset = center - setup.optical_mode.nu_c;
    EnsembleCoupling opt = setup.optical;
    for (auto& pk : opt.packets)
        pk.pop_diff = s_th;
    const LockedBranch branch = locked_branch(setup.optical_mode, opt, offset);
    if (branch.photon_fraction < 0.5)
        throw numeric_error("optical branch not resolved as photon-like (fraction " +
                            std::to_string(branch.photon_fraction) +
                            "); lock assumption violated");
    const double g2 = setup.optical.g_total * setup.optical.g_total;
    // uniform additive population modulation: dnu = (dnu/dG)|_s * G * ds / s_th
    const std::complex<double> dnu_branch = branch.dfreq_dg2 * g2 * pop.ds / s_th;

    // (4) error excursion through the calibrated discriminant and the servo
    // loop; the slope calibration cancels out of the Hz-converted amplitude
    // but must exist (a vanishing slope means the readout is blind)
    (void)calibrate_slope(setup.pdh, setup.optical_mode, opt, offset);
    const std::complex<double> cl =
        setup.servo.closed_loop_error_factor(setup.drive.mod_freq);
    const std::complex<double> excursion = dnu_branch * cl;

    OdmrPointResult out;
    out.response = excursion;
    out.photon_fraction = branch.photon_fraction;
    out.branch_frequency = branch.frequency;
    out.tau_eff = pop.tau_eff;
    out.reading.amplitude = std::abs(excursion);
    // phase convention: population lag relative to the modulation plus the
    // servo's phase; the overall instrument sign is folded into the amplitude
    out.reading.phase = wrap_phase_deg(std::arg(-pop.ds * cl) * 180.0 / M_PI);
    return out;
}

ScanResult odmr_map(const OdmrSetup& setup, const std::vector<double>& field_grid,
                    const std::vector<double>& nu_mu_grid) {
    if (field_grid.empty() || nu_mu_grid.empty())
        throw std::invalid_argument("odmr_map requires non-empty grids");
    if (!std::is_sorted(field_grid.begin(), field_grid.end()) ||
        !std::is_sorted(nu_mu_grid.begin(), nu_mu_grid.end()))
        throw std::invalid_argument("odmr_map grids must be sorted ascending");

    ScanResult res;
    res.axis1 = {"field", "T", field_grid};
    res.axis2 = Axis{"mw_frequency", "Hz", nu_mu_grid};
    res.value_names = {"amplitude", "phase"};
    res.value_units = {"Hz", ""};
    res.values.assign(2, std::vector<double>(res.grid_size(), 0.0));

    const std::size_t nmu = nu_mu_grid.size();
    parallel_for(field_grid.size(), [&](std::size_t bi) {
        for (std::size_t mi = 0; mi < nmu; ++mi) {
            const OdmrPointResult pt =
                odmr_point(setup, tesla(field_grid[bi]), nu_mu_grid[mi]);
            res.values[0][bi * nmu + mi] = pt.reading.amplitude;
            res.values[1][bi * nmu + mi] = pt.reading.phase;
        }
    });
    return res;
}

// ---------------------------------------------------------------------------
// Time-domain oracle
// ---------------------------------------------------------------------------

std::complex<double> lock_in_demodulate(const std::vector<double>& series, double dt,
                                        double f, std::size_t n_periods) {
    const std::size_t per = static_cast<std::size_t>(std::llround(1.0 / (f * dt)));
    const std::size_t need = per * n_periods;
    if (per < 3 || series.size() < need)
        throw std::invalid_argument("lock_in_demodulate: series too short or undersampled");
    const std::size_t start = series.size() - need;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < need; ++i) {
        const double t = static_cast<double>(start + i) * dt;
        acc += series[start + i] *
               std::exp(std::complex<double>(0.0, -2.0 * M_PI * f * t));
    }
    return acc * (2.0 / static_cast<double>(need));
}

TimeDomainResult time_domain_oracle(const OdmrSetup& setup, const Quantity& field,
                                    double nu_mu, std::size_t settle_periods,
                                    std::size_t demod_periods, double dt) {
    const double f = setup.drive.mod_freq;
    if (!(dt <= 1.0 / (50.0 * f)))
        throw std::invalid_argument("time_domain_oracle requires dt <= 1/(50 f_mod)");
    // snap dt to an integer number of samples per period
    const std::size_t per = static_cast<std::size_t>(std::ceil(1.0 / (f * dt)));
    dt = 1.0 / (f * static_cast<double>(per));

    const double nu12 = transition_frequency(setup.sys, Transition::MW_12, field);
    const double s_th =
        thermal_populations(setup.sys, field, setup.temperature).population_difference();
    AMDrive drv = setup.drive;
    drv.carrier_freq = nu_mu;
    const double p0 = drv.power_at_ions(setup.mw_mode);

    const double center =
        transition_frequency(setup.sys, setup.optical_transition, field);
    const double offset = center - setup.optical_mode.nu_c;
    EnsembleCoupling opt = setup.optical;

    const std::size_t n = setup.spin.size();
    std::vector<double> rate_shape(n); // pump rate per watt at each packet
    for (std::size_t k = 0; k < n; ++k)
        rate_shape[k] = setup.rates.pump_rate_per_watt *
                        lorentzian_peak1(nu_mu - nu12 - setup.spin[k].detuning,
                                         setup.spin[k].gamma_h);

    auto drive_power = [&](double t) {
        const double m = (setup.drive.waveform == AmWaveform::Square)
                             ? (std::cos(2.0 * M_PI * f * t) >= 0.0 ? 1.0 : -1.0)
                             : std::cos(2.0 * M_PI * f * t);
        return p0 * (1.0 + setup.drive.depth * m);
    };

    auto branch_freq = [&](double sbar) {
        for (auto& pk : opt.packets)
            pk.pop_diff = sbar;
        return locked_branch(setup.optical_mode, opt, offset).frequency;
    };

    // state = [s_0..s_{n-1}, ef, u]; the polariton is algebraic in s-bar
    std::vector<double> state(n + 2, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        state[k] = s_th / (1.0 + rate_shape[k] * p0 * setup.rates.t1);
    double sbar0 = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        sbar0 += setup.spin[k].weight * state[k];
    const double nu_set = branch_freq(sbar0);
    const double wlp = 2.0 * M_PI * setup.servo.input_lowpass_corner;
    const double wint = 2.0 * M_PI * setup.servo.unity_gain_bandwidth;
    // a corner far above the sampling rate would make the filter ODE stiff;
    // such a filter is transparent, so feed the error through directly
    const bool lp_transparent = wlp * dt > 0.5;

    auto deriv = [&](double t, const std::vector<double>& st, std::vector<double>& d) {
        const double p = drive_power(t);
        double sbar = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            d[k] = (s_th - st[k]) / setup.rates.t1 - rate_shape[k] * p * st[k];
            sbar += setup.spin[k].weight * st[k];
        }
        const double nu_p = branch_freq(sbar);
        const double e = nu_p - nu_set - st[n + 1]; // frequency error seen by the lock
        if (lp_transparent) {
            d[n] = 0.0;
            d[n + 1] = wint * e;
        } else {
            d[n] = wlp * (e - st[n]); // servo input low-pass state
            d[n + 1] = wint * st[n];  // integrator output (laser correction)
        }
    };

    const std::size_t steps = per * (settle_periods + demod_periods);
    TimeDomainResult out;
    out.dt = dt;
    out.error_hz.reserve(steps + 1);

    std::vector<double> k1(n + 2), k2(n + 2), k3(n + 2), k4(n + 2), tmp(n + 2);
    const double bound = 10.0 * std::max(1.0, std::abs(s_th));
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        double sbar = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            sbar += setup.spin[k].weight * state[k];
        const double e_now = branch_freq(sbar) - nu_set - state[n + 1];
        out.error_hz.push_back(e_now);
        if (i == steps)
            break;

        deriv(t, state, k1);
        for (std::size_t j = 0; j < state.size(); ++j)
            tmp[j] = state[j] + 0.5 * dt * k1[j];
        deriv(t + 0.5 * dt, tmp, k2);
        for (std::size_t j = 0; j < state.size(); ++j)
            tmp[j] = state[j] + 0.5 * dt * k2[j];
        deriv(t + 0.5 * dt, tmp, k3);
        for (std::size_t j = 0; j < state.size(); ++j)
            tmp[j] = state[j] + dt * k3[j];
        deriv(t + dt, tmp, k4);
        for (std::size_t j = 0; j < state.size(); ++j)
            state[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

        for (std::size_t k = 0; k < n; ++k)
            if (!std::isfinite(state[k]) || std::abs(state[k]) > bound)
                throw numeric_error("time_domain_oracle: population norm grew beyond "
                                    "bounds; reduce the step size");
        if (!std::isfinite(state[n + 1]))
            throw numeric_error("time_domain_oracle: servo state diverged");
    }

    out.demod = lock_in_demodulate(out.error_hz, dt, f, demod_periods);
    out.reading.amplitude = std::abs(out.demod);
    out.reading.phase = wrap_phase_deg(std::arg(out.demod) * 180.0 / M_PI);
    return out;
}

} // namespace modr
