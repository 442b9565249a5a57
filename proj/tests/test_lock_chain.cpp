#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modr/config.hpp"
#include "modr/fit.hpp"
#include "modr/lock_chain.hpp"
#include "modr/runner.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace modr;

namespace {

const ZeemanSystem paper_sys{195116.7e9, 11.52, 7.7};

OdmrSetup small_setup(std::size_t n_packets = 256) {
    Scenario sc = parse_config(bundled_scenarios().at("fig6e"));
    sc.packets = n_packets;
    return sc.odmr_setup();
}

} // namespace

TEST_CASE("discriminant is odd and vanishes on resonance") {
    DiscriminatorConfig cfg{25e6, 1.08, DiscriminatorKind::PdhOptical};
    CavityMode mode{1e14, 1.32e6, 0.4e6, Polarization::TE, 0};
    CHECK(std::abs(pdh_error_bare(cfg, mode, 0.0)) <= 1e-12);
    for (double d = 1e4; d < 3e7; d *= 2.7)
        CHECK(pdh_error_bare(cfg, mode, d) ==
              doctest::Approx(-pdh_error_bare(cfg, mode, -d)).epsilon(1e-9));
}

TEST_CASE("discriminant slope peaks at the lock point") {
    DiscriminatorConfig cfg{25e6, 1.08, DiscriminatorKind::PdhOptical};
    CavityMode mode{1e14, 1.32e6, 0.4e6, Polarization::TE, 0};
    const double h = mode.kappa_total() / 2000.0;
    const double slope0 =
        std::abs(pdh_error_bare(cfg, mode, h) - pdh_error_bare(cfg, mode, -h)) / (2 * h);
    for (double d = 0.05 * mode.kappa_total(); d < 0.5 * mode.kappa_total(); d *= 1.6) {
        const double s = std::abs(pdh_error_bare(cfg, mode, d + h) -
                                  pdh_error_bare(cfg, mode, d - h)) /
                         (2 * h);
        CHECK(s < slope0);
    }
}

TEST_CASE("discriminant slope across the coupling regimes") {
    // In the resolved-sideband regime the discriminant reduces to 2 Im r of
    // the carrier, whose central slope is kappa_ext-positive for any coupling
    // ratio: the finite-difference sweep shows no sign flip at the
    // impedance-matched point, only a magnitude that grows with kappa_ext.
    DiscriminatorConfig cfg{25e6, 1.08, DiscriminatorKind::PdhOptical};
    const double h = 1e3;
    auto slope_of = [&](const CavityMode& m) {
        return (pdh_error_bare(cfg, m, h) - pdh_error_bare(cfg, m, -h)) / (2 * h);
    };
    CavityMode under{1e14, 2.0e6, 0.5e6, Polarization::TE, 0};
    CavityMode critical{1e14, 1.25e6, 1.25e6, Polarization::TE, 0};
    CavityMode over{1e14, 0.5e6, 2.0e6, Polarization::TE, 0};
    const double s_under = slope_of(under);
    const double s_crit = slope_of(critical);
    const double s_over = slope_of(over);
    CHECK(s_under > 0.0);
    CHECK(s_crit > 0.0);
    CHECK(s_over > 0.0);
    CHECK(s_over > s_under); // same total linewidth, more coupled port
}

TEST_CASE("slope calibration inverts small synthetic shifts") {
    DiscriminatorConfig cfg{25e6, 1.08, DiscriminatorKind::PoundMicrowave};
    CavityMode mode{12.155e9, 1e6, 1e6, Polarization::MW, 0};
    const double cal = calibrate_slope_bare(cfg, mode);

    const double shift = mode.kappa_total() / 50.0;
    const double estimate =
        -(pdh_error_bare(cfg, mode, -shift) - pdh_error_bare(cfg, mode, 0.0)) * cal;
    CHECK(estimate == doctest::Approx(shift).epsilon(0.01));

    // doubling both rates rescales the raw slope but not the calibrated shift
    CavityMode wide{12.155e9, 2e6, 2e6, Polarization::MW, 0};
    const double cal2 = calibrate_slope_bare(cfg, wide);
    const double est2 =
        -(pdh_error_bare(cfg, wide, -shift) - pdh_error_bare(cfg, wide, 0.0)) * cal2;
    CHECK(est2 == doctest::Approx(shift).epsilon(0.01));
    CHECK(cal != doctest::Approx(cal2).epsilon(0.05));

    // a decoupled port has no discriminant at all
    CavityMode dark{12.155e9, 1e6, 0.0, Polarization::MW, 0};
    CHECK_THROWS_AS(calibrate_slope_bare(cfg, dark), numeric_error);
}

TEST_CASE("servo transfer"){
    ServoConfig servo{30.0, 151.8};
    const auto l = servo.open_loop(1e3);
    CHECK(std::abs(l) == doctest::Approx(0.03 / std::hypot(1.0, 1e3 / 151.8)).epsilon(1e-9));
    // the 1 kHz modulation survives the closed loop essentially untouched
    CHECK(std::abs(servo.closed_loop_error_factor(1e3)) ==
          doctest::Approx(1.0).epsilon(0.01));
    const ServoConfig dead{0.0, 151.8};
    CHECK_THROWS_AS(dead.validate(), std::invalid_argument);
}

TEST_CASE("AM drive power bookkeeping") {
    AMDrive drive;
    drive.power_in = dbm(5.0);
    drive.insertion_loss_db = 40.0;
    drive.carrier_freq = 12.155e9;
    drive.field_enhancement = 1.0;
    CavityMode mw{12.155e9, 1e6, 1e6, Polarization::MW, 0};
    // 5 dBm - 40 dB on resonance
    CHECK(drive.power_at_ions(mw) == doctest::Approx(dbm_to_watts(dbm(-35.0)).value)
                                         .epsilon(1e-9));
    // enhancement enters squared
    drive.field_enhancement = 1.652;
    CHECK(drive.power_at_ions(mw) ==
          doctest::Approx(dbm_to_watts(dbm(-35.0)).value * 1.652 * 1.652).epsilon(1e-9));
    // detuned from the cavity: Lorentzian buildup
    drive.field_enhancement = 1.0;
    drive.carrier_freq = 12.155e9 + 1e6;
    CHECK(drive.power_at_ions(mw) ==
          doctest::Approx(dbm_to_watts(dbm(-35.0)).value / 2.0).epsilon(1e-6));

    AMDrive square = drive;
    square.waveform = AmWaveform::Square;
    square.depth = 0.45;
    CHECK(square.first_harmonic_depth() == doctest::Approx(0.45 * 4.0 / M_PI));

    AMDrive bad = drive;
    bad.depth = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("EPR sweep: saturation kills the pull and the width stays put") {
    Scenario sc = parse_config(bundled_scenarios().at("fig3b"));
    sc.packets = 512;
    sc.noise = 0.0;
    // packet width wide enough for the drive to reach the whole line; with a
    // kHz-wide packet a single-frequency drive only burns a local hole
    sc.gamma_spin = 5e6;
    const auto fields = linspace(sc.field_start, sc.field_stop, 81);

    auto sweep_at = [&](double power_dbm) {
        AMDrive drive = sc.drive;
        drive.power_in = dbm(power_dbm);
        return epr_scan(sc.mw_mode, sc.sys, sc.mw_coupling(), sc.pound, drive, sc.rates,
                        fields, sc.temperature);
    };

    const ScanResult weak = sweep_at(-20.0);
    const ScanResult strong = sweep_at(60.0);
    double weak_p2p = 0.0, strong_p2p = 0.0;
    for (double v : weak.values[1])
        weak_p2p = std::max(weak_p2p, std::abs(v));
    for (double v : strong.values[1])
        strong_p2p = std::max(strong_p2p, std::abs(v));
    CHECK(strong_p2p <= 0.02 * weak_p2p); // fully saturated doublet pulls nothing

    // fitted width is power-independent within a few percent
    std::vector<double> widths;
    for (double p : {-20.0, -5.0, 2.0}) {
        const ScanResult sw = sweep_at(p);
        const GaussianDerivativeFit fit =
            fit_gaussian_derivative({sw.values[0], sw.values[1], {}});
        REQUIRE(fit.fit.converged);
        widths.push_back(fit.fwhm);
    }
    CHECK(widths[1] == doctest::Approx(widths[0]).epsilon(0.05));
    CHECK(widths[2] == doctest::Approx(widths[0]).epsilon(0.05));
}

TEST_CASE("EPR peak-to-peak saturation fits the decaying model consistently") {
    Scenario sc = parse_config(bundled_scenarios().at("fig5"));
    sc.packets = 256;
    sc.noise = 0.0;
    const ScanResult series = run_scenario(sc, Task::SaturationSeries);
    const auto& p_w = series.values[0];
    const auto& p2p = series.values[1];
    const SaturationFit fit = fit_saturation({p_w, p2p, {}}, true);
    REQUIRE(fit.fit.converged);
    const double grid = oracle::grid_search_psat(p_w, p2p, true, p_w.front() / 3.0,
                                                 p_w.back() * 3.0, 6000);
    CHECK(fit.p_sat_watts == doctest::Approx(grid).epsilon(0.05));
}

TEST_CASE("ODMR point basics") {
    const OdmrSetup setup = small_setup();
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);

    OdmrSetup zero_power = setup;
    zero_power.drive.power_in = watts(0.0);
    CHECK(odmr_point(zero_power, b, 12.155e9).reading.amplitude == doctest::Approx(0.0));

    OdmrSetup zero_depth = setup;
    zero_depth.drive.depth = 0.0;
    CHECK(odmr_point(zero_depth, b, 12.155e9).reading.amplitude == doctest::Approx(0.0));

    const OdmrPointResult pt = odmr_point(setup, b, 12.155e9);
    CHECK(pt.reading.amplitude > 0.0);
    CHECK(pt.photon_fraction > 0.5);
    CHECK(pt.reading.phase > -180.0);
    CHECK(pt.reading.phase <= 180.0);

    // far from the spin line the response dies
    const OdmrPointResult far = odmr_point(setup, b, 12.155e9 + 2e9);
    CHECK(far.reading.amplitude <= 1e-4 * pt.reading.amplitude);
}

TEST_CASE("ODMR phase is the population lag plus the servo phase") {
    OdmrSetup setup = small_setup();
    setup.rates.t1 = 0.05;
    // negligible pumping keeps tau_eff at t1
    setup.drive.power_in = dbm(-60.0);
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
    const OdmrPointResult pt = odmr_point(setup, b, 12.155e9);
    const double expected_lag = -std::atan(2.0 * M_PI * 1e3 * 0.05) * 180.0 / M_PI;
    const double servo_phase =
        std::arg(setup.servo.closed_loop_error_factor(1e3)) * 180.0 / M_PI;
    CHECK(pt.reading.phase == doctest::Approx(expected_lag + servo_phase).epsilon(1e-3));
    CHECK(pt.reading.phase == doctest::Approx(-89.8176).epsilon(1e-3));
}

TEST_CASE("ODMR sensitivity falls off as one over the optical detuning") {
    OdmrSetup setup = small_setup();
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
    // shift the optical mode to put the ensemble 20g and 40g away
    const double g_obs =
        setup.optical.g_total *
        std::sqrt(thermal_populations(setup.sys, b, setup.temperature)
                      .population_difference());
    const double center = transition_frequency(setup.sys, setup.optical_transition, b);

    auto amp_at = [&](double detuning) {
        OdmrSetup moved = setup;
        moved.optical_mode.nu_c = center - detuning;
        return odmr_point(moved, b, 12.155e9).reading.amplitude;
    };
    const double a20 = amp_at(20.0 * g_obs);
    const double a40 = amp_at(40.0 * g_obs);
    CHECK(a20 / a40 == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("ODMR refuses an unresolved lock") {
    OdmrSetup setup = small_setup();
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
    const double center = transition_frequency(setup.sys, setup.optical_transition, b);
    setup.optical_mode.nu_c = center; // dead on the ensemble: fraction ~ 0.5
    CHECK_THROWS_AS(odmr_point(setup, b, 12.155e9), numeric_error);
}

TEST_CASE("lock-in demodulation of a pure sinusoid") {
    const double f = 1e3, dt = 1.0 / (f * 64.0);
    const double amp = 3.7, phase = 0.6;
    std::vector<double> series;
    for (std::size_t i = 0; i < 64 * 25; ++i) {
        const double t = static_cast<double>(i) * dt;
        series.push_back(amp * std::cos(2.0 * M_PI * f * t + phase) + 11.0);
    }
    const auto z = lock_in_demodulate(series, dt, f, 20);
    CHECK(std::abs(z) == doctest::Approx(amp).epsilon(1e-3));
    CHECK(std::arg(z) == doctest::Approx(phase).epsilon(1e-3));
    CHECK_THROWS_AS(lock_in_demodulate(series, dt, f, 100), std::invalid_argument);
}

TEST_CASE("lock-in amplitude ignores a common delay; phase tracks it linearly") {
    const double f = 1e3, dt = 1.0 / (f * 64.0);
    std::vector<double> series;
    for (std::size_t i = 0; i < 64 * 30; ++i) {
        const double t = static_cast<double>(i) * dt;
        series.push_back(2.5 * std::cos(2.0 * M_PI * f * t + 0.3));
    }
    const auto z0 = lock_in_demodulate(series, dt, f, 20);
    for (const std::size_t shift : {3ul, 17ul, 40ul}) {
        // delay the signal by dropping leading samples; the reference keeps
        // running on absolute time, so the phase advances by 2 pi f dt shift
        std::vector<double> delayed(series.begin() + shift, series.end());
        const auto z = lock_in_demodulate(delayed, dt, f, 20);
        CHECK(std::abs(z) == doctest::Approx(std::abs(z0)).epsilon(1e-6));
        const double expected =
            wrap_phase_deg((std::arg(z0) + 2.0 * M_PI * f * dt * shift) * 180.0 / M_PI);
        CHECK(wrap_phase_deg(std::arg(z) * 180.0 / M_PI) ==
              doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("time-domain oracle agrees with the analytic chain") {
    // three operating points in the linear-response regime
    struct Point {
        double power_dbm, t1, detune;
    };
    const Point points[] = {{-6.0, 2e-3, 0.0}, {0.0, 2e-3, 10e6}, {-12.0, 5e-3, 0.0}};
    for (const auto& pt : points) {
        OdmrSetup setup = small_setup(96);
        setup.drive.depth = 0.10;
        setup.drive.power_in = dbm(pt.power_dbm);
        setup.rates.t1 = pt.t1;
        setup.rates.pump_rate_per_watt = 1.0 / (2.41e-7 * pt.t1);
        const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
        const double nu_mu = 12.155e9 + pt.detune;

        const OdmrPointResult analytic = odmr_point(setup, b, nu_mu);
        const TimeDomainResult td =
            time_domain_oracle(setup, b, nu_mu, 30, 20, 1.0 / (80.0 * 1e3));

        CHECK(td.reading.amplitude ==
              doctest::Approx(analytic.reading.amplitude).epsilon(0.02));
        double dphi = std::fmod(td.reading.phase - analytic.reading.phase, 180.0);
        if (dphi > 90.0)
            dphi -= 180.0;
        if (dphi < -90.0)
            dphi += 180.0;
        CHECK(std::abs(dphi) <= 2.0);
    }
}

TEST_CASE("the input low-pass keeps the servo from eating the modulation") {
    OdmrSetup setup = small_setup(96);
    setup.drive.depth = 0.10;
    setup.drive.power_in = dbm(-6.0);
    setup.rates.t1 = 2e-3;
    setup.rates.pump_rate_per_watt = 1.0 / (2.41e-7 * setup.rates.t1);
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
    const double dt = 1.0 / (80.0 * 1e3);

    auto amplitude_with = [&](double ugb, double corner) {
        OdmrSetup s = setup;
        s.servo.unity_gain_bandwidth = ugb;
        s.servo.input_lowpass_corner = corner;
        return time_domain_oracle(s, b, 12.155e9, 30, 20, dt).reading.amplitude;
    };

    const double open_loop = amplitude_with(1e-3, 151.8); // negligible gain
    const double aggressive = amplitude_with(500.0, 1e9); // no input filtering
    const double filtered = amplitude_with(500.0, 151.8);

    CHECK(aggressive < 0.95 * open_loop);                      // the lock fights the tone
    CHECK(std::abs(filtered - open_loop) <= 0.10 * open_loop); // the filter restores it
}

TEST_CASE("time-domain step-size guard") {
    OdmrSetup setup = small_setup(64);
    const Quantity b = resonant_field(setup.sys, Transition::MW_12, 12.155e9);
    CHECK_THROWS_AS(time_domain_oracle(setup, b, 12.155e9, 2, 2, 1.0 / (10.0 * 1e3)),
                    std::invalid_argument);
}

TEST_CASE("phase wrapping lands in (-180, 180]") {
    CHECK(wrap_phase_deg(190.0) == doctest::Approx(-170.0));
    CHECK(wrap_phase_deg(-190.0) == doctest::Approx(170.0));
    CHECK(wrap_phase_deg(180.0) == doctest::Approx(180.0));
    CHECK(wrap_phase_deg(-180.0) == doctest::Approx(180.0));
    CHECK(wrap_phase_deg(540.0) == doctest::Approx(180.0));
}
