#include "modr/runner.hpp"

#include "modr/rng.hpp"
#include "modr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace modr {

Task task_from_name(std::string_view name) {
    if (name == "spectrum-map") return Task::SpectrumMap;
    if (name == "epr-sweep") return Task::EprSweep;
    if (name == "odmr-map") return Task::OdmrMap;
    if (name == "saturation-series") return Task::SaturationSeries;
    if (name == "fsr-analysis") return Task::FsrAnalysis;
    throw std::invalid_argument("unknown task '" + std::string(name) +
                                "' (expected spectrum-map, epr-sweep, odmr-map, "
                                "saturation-series or fsr-analysis)");
}

std::string_view task_name(Task t) {
    switch (t) {
    case Task::SpectrumMap: return "spectrum-map";
    case Task::EprSweep: return "epr-sweep";
    case Task::OdmrMap: return "odmr-map";
    case Task::SaturationSeries: return "saturation-series";
    case Task::FsrAnalysis: return "fsr-analysis";
    }
    return "?";
}

namespace {

void add_noise(ScanResult& scan, const Scenario& sc,
               const std::vector<std::string>& noisy_columns) {
    if (!(sc.noise > 0.0))
        return;
    GaussianRng rng(sc.seed);
    for (const auto& name : noisy_columns) {
        for (std::size_t c = 0; c < scan.value_names.size(); ++c) {
            if (scan.value_names[c] != name)
                continue;
            double peak = 0.0;
            for (double v : scan.values[c])
                peak = std::max(peak, std::abs(v));
            const double amp = sc.noise * peak;
            for (double& v : scan.values[c])
                v += amp * rng();
        }
    }
}

ScanResult run_spectrum_map(const Scenario& sc) {
    OpticalDrive drive;
    drive.power = (sc.optical_power.dim == Dimension::PowerDbm)
                      ? dbm_to_watts(sc.optical_power)
                      : sc.optical_power;
    drive.rates = sc.rates;
    ScanResult scan = anticrossing_map(
        sc.optical_mode, sc.sys, sc.transition, sc.optical_coupling(),
        linspace(sc.field_start, sc.field_stop, sc.field_points),
        linspace(sc.laser_start, sc.laser_stop, sc.laser_points), sc.temperature, drive);
    add_noise(scan, sc, {"reflectance"});
    return scan;
}

ScanResult run_epr_sweep(const Scenario& sc) {
    ScanResult scan = epr_scan(sc.mw_mode, sc.sys, sc.mw_coupling(), sc.pound, sc.drive,
                               sc.rates, linspace(sc.field_start, sc.field_stop,
                                                  sc.field_points),
                               sc.temperature);
    add_noise(scan, sc, {"shift"});
    return scan;
}

ScanResult run_odmr_map(const Scenario& sc) {
    ScanResult scan = odmr_map(sc.odmr_setup(),
                               linspace(sc.field_start, sc.field_stop, sc.field_points),
                               linspace(sc.mw_start, sc.mw_stop, sc.mw_points));
    add_noise(scan, sc, {"amplitude"});
    return scan;
}

ScanResult run_saturation_series(const Scenario& sc) {
    const double dbm_start = (sc.power_start.dim == Dimension::PowerDbm)
                                 ? sc.power_start.value
                                 : watts_to_dbm(sc.power_start).value;
    const double dbm_stop = (sc.power_stop.dim == Dimension::PowerDbm)
                                ? sc.power_stop.value
                                : watts_to_dbm(sc.power_stop).value;
    const std::vector<double> powers = linspace(dbm_start, dbm_stop, sc.power_points);

    // field window spanning the EPR line around the carrier resonance
    const Quantity b_res = resonant_field(sc.sys, Transition::MW_12, sc.drive.carrier_freq);
    const double sigma_b = (sc.mw_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)))) /
                           transition_slope(sc.sys, Transition::MW_12);
    const std::vector<double> fields =
        linspace(b_res.value - 2.5 * sigma_b, b_res.value + 2.5 * sigma_b, 41);

    const EnsembleCoupling mw = sc.mw_coupling();
    OdmrSetup odmr = sc.odmr_setup();

    ScanResult res;
    res.axis1 = {"power", "dBm", powers};
    res.value_names = {"power_w", "epr_p2p", "odmr_amp"};
    res.value_units = {"W", "Hz", "Hz"};
    res.values.assign(3, std::vector<double>(powers.size(), 0.0));

    for (std::size_t i = 0; i < powers.size(); ++i) {
        AMDrive drive = sc.drive;
        drive.power_in = dbm(powers[i]);
        res.values[0][i] = dbm_to_watts(drive.power_in).value;

        // EPR probes the cavity-average field: no enhancement factor
        AMDrive epr_drive = drive;
        epr_drive.field_enhancement = 1.0;
        const ScanResult sweep = epr_scan(sc.mw_mode, sc.sys, mw, sc.pound, epr_drive,
                                          sc.rates, fields, sc.temperature);
        const auto& shift = sweep.values[1];
        res.values[1][i] = *std::max_element(shift.begin(), shift.end()) -
                           *std::min_element(shift.begin(), shift.end());

        odmr.drive = drive;
        res.values[2][i] =
            odmr_point(odmr, b_res, sc.drive.carrier_freq).reading.amplitude;
    }
    add_noise(res, sc, {"epr_p2p", "odmr_amp"});
    return res;
}

} // namespace

FsrTable fsr_table_from_csv(const CsvTable& csv) {
    FsrTable table;
    const std::size_t mcol = csv.column("m");
    const std::size_t fcol = csv.column("fsr");
    const std::size_t scol = csv.has_column("sigma") ? csv.column("sigma") : mcol;
    const double fscale = csv.units[fcol].empty()
                              ? 1.0
                              : parse_quantity("1 " + csv.units[fcol]).value;
    const double sscale = (scol != mcol && !csv.units[scol].empty())
                              ? parse_quantity("1 " + csv.units[scol]).value
                              : 1.0;
    for (std::size_t r = 0; r < csv.rows(); ++r) {
        FsrRow row;
        row.m_offset = static_cast<int>(std::llround(csv.columns[mcol][r]));
        row.fsr = csv.columns[fcol][r] * fscale;
        row.sigma = (scol != mcol) ? csv.columns[scol][r] * sscale : 0.0;
        table.rows.push_back(row);
    }
    return table;
}

ScanResult run_fsr_analysis(const FsrTable& table, const Quantity& radius) {
    const std::vector<GvdRow> rows = gvd_from_fsrs(table, radius);
    ScanResult res;
    res.axis1.name = "m";
    res.axis1.unit = "";
    res.value_names = {"delta_fsr", "fsr_mean", "beta2_fs2_per_m", "beta2_sigma_fs2_per_m"};
    res.value_units = {"MHz", "GHz", "", ""};
    res.values.assign(4, {});
    for (const auto& g : rows) {
        res.axis1.values.push_back(g.m_offset);
        res.values[0].push_back(g.delta_fsr / 1e6);
        res.values[1].push_back(g.fsr_mean / 1e9);
        res.values[2].push_back(g.beta2 * 1e30);
        res.values[3].push_back(g.beta2_sigma * 1e30);
    }
    return res;
}

ScanResult run_scenario(const Scenario& sc, Task task) {
    const std::string context =
        "scenario '" + sc.id + "', task " + std::string(task_name(task)) + ": ";
    ScanResult scan;
    try {
        switch (task) {
        case Task::SpectrumMap: scan = run_spectrum_map(sc); break;
        case Task::EprSweep: scan = run_epr_sweep(sc); break;
        case Task::OdmrMap: scan = run_odmr_map(sc); break;
        case Task::SaturationSeries: scan = run_saturation_series(sc); break;
        case Task::FsrAnalysis:
            scan = run_fsr_analysis(fsr_table_from_csv(parse_csv(bundled_fsr_csv())),
                                    sc.fsr_radius);
            break;
        }
    } catch (const numeric_error& e) {
        throw numeric_error(context + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(context + e.what());
    } catch (const std::domain_error& e) {
        throw std::domain_error(context + e.what());
    }
    scan.scenario_id = sc.id;
    scan.seed = sc.seed;
    return scan;
}

// ---------------------------------------------------------------------------
// Bundled data and scenarios
// ---------------------------------------------------------------------------

const std::string& bundled_fsr_csv() {
    static const std::string text =
        "# TM mode family near 195112.8 GHz; azimuthal number of the reference mode ~ 15000\n"
        "# row m holds the spacing between modes m+1 and m\n"
        "m(),fsr(GHz),sigma(MHz)\n"
        "3,12.3255,0.5\n"
        "2,12.3125,0.5\n"
        "1,12.2470,0.5\n"
        "0,12.8180,0.5\n"
        "-1,12.0870,0.5\n"
        "-2,12.3000,0.5\n"
        "-3,12.3215,0.5\n";
    return text;
}

const std::map<std::string, std::string>& bundled_scenarios() {
    static const std::map<std::string, std::string> table = {
        {"fig3a", R"(# TE mode anticrossing the lower-to-lower optical transition
[scenario]
id = "fig3a"
seed = 31001
noise = 0.0

[spin]
g_ground = 11.5
g_excited = 7.7

[ensemble]
optical_fwhm = "150 MHz"
g_optical = "5.5 GHz"

[optical_mode]
frequency = "195118.0 GHz"
kappa_int = "1.32 MHz"
kappa_ext = "1.32 MHz"
polarization = "TE"

[scan]
transition = "O_13"
temperature = "4 K"
field_start = "5 mT"
field_stop = "100 mT"
field_points = 191
laser_start = "-2.5 GHz"
laser_stop = "2.5 GHz"
laser_points = 351
optical_power = "0 W"
)"},
        {"fig3b", R"(# Pound EPR sweep across the ground-doublet resonance
[scenario]
id = "fig3b"
seed = 31002
noise = 0.01

[ensemble]
mw_fwhm = "47.4 MHz"
g_mw = "8.5 MHz"

[mw_mode]
frequency = "12.155 GHz"
kappa_int = "1 MHz"
kappa_ext = "1 MHz"

[drive]
carrier = "12.155 GHz"
power = "-20 dBm"

[scan]
temperature = "4 K"
field_start = "75.2 mT"
field_stop = "75.58 mT"
field_points = 161
)"},
        {"fig4", R"(# TM mode anticrossing under strong optical pumping, cold cryostat
[scenario]
id = "fig4"
seed = 31004
noise = 0.0

[ensemble]
optical_fwhm = "150 MHz"
g_optical = "2.0 GHz"
gamma_optical = "40 MHz"

[rates]
t1 = "50 ms"
pump_rate_per_watt = 4000

[optical_mode]
frequency = "195112.8 GHz"
kappa_int = "1.32 MHz"
kappa_ext = "35 kHz"
polarization = "TM"

[scan]
transition = "O_24"
temperature = "2.9 K"
field_start = "120 mT"
field_stop = "170 mT"
field_points = 201
laser_start = "-1.5 GHz"
laser_stop = "1.5 GHz"
laser_points = 301
optical_power = "15 mW"
)"},
        {"fig5", R"(# EPR and ODMR response vs microwave drive power
[scenario]
id = "fig5"
seed = 31005
noise = 0.005

[ensemble]
mw_fwhm = "47.8 MHz"
optical_fwhm = "150 MHz"
g_mw = "8.5 MHz"
g_optical = "556 MHz"
gamma_spin = "20 MHz"

[rates]
t1 = "50 ms"
pump_rate_per_watt = 2.95e8

[optical_mode]
frequency = "195106.1 GHz"
kappa_int = "1.32 MHz"
kappa_ext = "6.6 MHz"

[mw_mode]
frequency = "12.155 GHz"
kappa_int = "1 MHz"
kappa_ext = "240 MHz"

[drive]
carrier = "12.155 GHz"
depth = 0.45
mod_freq = "1 kHz"
insertion_loss_db = 40
field_enhancement = 1.652

[scan]
transition = "O_23"
temperature = "4 K"
power_start = "-15 dBm"
power_stop = "15 dBm"
power_points = 31
)"},
        {"fig6b", R"(# ODMR amplitude/phase map, weakly coupled TE pair
[scenario]
id = "fig6b"
seed = 31006
noise = 0.0

[ensemble]
mw_fwhm = "47.8 MHz"
optical_fwhm = "150 MHz"
g_optical = "556 MHz"
g_mw = "8.5 MHz"

[optical_mode]
frequency = "195106.2 GHz"
kappa_int = "1.32 MHz"
kappa_ext = "6.6 MHz"

[mw_mode]
frequency = "12.155 GHz"
kappa_int = "1 MHz"
kappa_ext = "240 MHz"

[drive]
power = "5 dBm"
depth = 0.45
mod_freq = "1 kHz"
insertion_loss_db = 40

[scan]
transition = "O_23"
temperature = "4 K"
field_start = "75.16 mT"
field_stop = "75.61 mT"
field_points = 25
mw_start = "12.119 GHz"
mw_stop = "12.191 GHz"
mw_points = 25
)"},
        {"fig6e", R"(# ODMR amplitude/phase map, strongly coupled TE mode
[scenario]
id = "fig6e"
seed = 31007
noise = 0.0

[ensemble]
mw_fwhm = "47.8 MHz"
optical_fwhm = "150 MHz"
g_optical = "4.45 GHz"
g_mw = "8.5 MHz"

[optical_mode]
frequency = "195112.7 GHz"
kappa_int = "1.32 MHz"
kappa_ext = "6.6 MHz"

[mw_mode]
frequency = "12.155 GHz"
kappa_int = "1 MHz"
kappa_ext = "240 MHz"

[drive]
power = "5 dBm"
depth = 0.45
mod_freq = "1 kHz"
insertion_loss_db = 40

[scan]
transition = "O_24"
temperature = "4 K"
field_start = "75.16 mT"
field_stop = "75.61 mT"
field_points = 25
mw_start = "12.119 GHz"
mw_stop = "12.191 GHz"
mw_points = 25
)"},
    };
    return table;
}

ScanResult select_columns(const ScanResult& scan, const std::vector<std::string>& names) {
    ScanResult out = scan;
    out.value_names.clear();
    out.value_units.clear();
    out.values.clear();
    for (const auto& name : names) {
        bool found = false;
        for (std::size_t c = 0; c < scan.value_names.size(); ++c) {
            if (scan.value_names[c] == name) {
                out.value_names.push_back(scan.value_names[c]);
                out.value_units.push_back(scan.value_units[c]);
                out.values.push_back(scan.values[c]);
                found = true;
                break;
            }
        }
        if (!found)
            throw std::invalid_argument("scan has no value column '" + name + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reproduction pipelines
// ---------------------------------------------------------------------------

namespace {

std::string fit_csv(const std::vector<std::string>& names,
                    const std::vector<std::string>& units,
                    const std::vector<double>& values, const std::vector<double>& stderrs,
                    const std::vector<std::string>& comments) {
    ScanResult sheet;
    sheet.scenario_id = "fit";
    sheet.axis1 = {"row", "", {0.0, 1.0}}; // row 0: value, row 1: stderr
    sheet.value_names = names;
    sheet.value_units = units;
    for (std::size_t c = 0; c < names.size(); ++c)
        sheet.values.push_back({values[c], c < stderrs.size() ? stderrs[c] : 0.0});
    std::string text = csv_from_scan(sheet);
    std::string head;
    for (const auto& cm : comments)
        head += "# " + cm + "\n";
    return head + text;
}

std::string gaussian_derivative_fit_csv(const GaussianDerivativeFit& fit,
                                        const std::string& xunit,
                                        const std::string& yunit) {
    std::vector<std::string> comments = {
        "model: gaussian-derivative",
        std::string("converged: ") + (fit.fit.converged ? "yes" : "no"),
        "iterations: " + std::to_string(fit.fit.n_iter),
    };
    if (!fit.fit.message.empty())
        comments.push_back("note: " + fit.fit.message);
    std::vector<double> stderrs = fit.fit.stderrs;
    stderrs.resize(7, 0.0);
    stderrs[4] = fit.fwhm_stderr;
    return fit_csv({"amplitude", "center", "sigma", "offset", "fwhm", "peak_to_peak",
                    "extremum_separation"},
                   {yunit, xunit, xunit, yunit, xunit, yunit, xunit},
                   {fit.fit.param("amplitude"), fit.fit.param("center"),
                    std::abs(fit.fit.param("sigma")), fit.fit.param("offset"), fit.fwhm,
                    fit.peak_to_peak, fit.extremum_separation},
                   stderrs, comments);
}

std::string saturation_fit_csv(const SaturationFit& fit, const std::string& yunit) {
    std::vector<std::string> comments = {
        std::string("model: saturation (") + (fit.decaying ? "decaying" : "rising") + ")",
        std::string("converged: ") + (fit.fit.converged ? "yes" : "no"),
        "iterations: " + std::to_string(fit.fit.n_iter),
    };
    if (!fit.fit.message.empty())
        comments.push_back("note: " + fit.fit.message);
    std::vector<double> stderrs = fit.fit.stderrs;
    stderrs.resize(4, 0.0);
    return fit_csv({"dnu_max", "p_sat", "p_sat_w", "p_sat_dbm"},
                   {yunit, "W", "W", "dBm"},
                   {fit.fit.param("dnu_max"), fit.fit.param("p_sat"), fit.p_sat_watts,
                    fit.p_sat_dbm},
                   stderrs, comments);
}

void write_out(std::vector<std::string>& written, const std::string& path,
               const std::string& text) {
    write_text_file(path, text);
    written.push_back(path);
}

} // namespace

std::vector<std::string> reproduce(const std::string& figure_id, const std::string& outdir,
                                   const std::uint64_t* seed_override) {
    const auto& table = bundled_scenarios();
    const auto it = table.find(figure_id);
    if (it == table.end()) {
        std::string known;
        for (const auto& [k, v] : table)
            known += (known.empty() ? "" : ", ") + k;
        throw std::invalid_argument("unknown figure id '" + figure_id + "' (bundled: " +
                                    known + ")");
    }
    Scenario sc = parse_config(it->second);
    if (seed_override)
        sc.seed = *seed_override;

    std::filesystem::create_directories(outdir);
    const std::string base = outdir + "/" + figure_id;
    std::vector<std::string> written;

    if (figure_id == "fig3a" || figure_id == "fig4") {
        const ScanResult scan = run_scenario(sc, Task::SpectrumMap);
        write_out(written, base + ".csv", csv_from_scan(scan));
        write_out(written, base + ".svg", emit_svg(scan, PlotStyle::Heatmap));
    } else if (figure_id == "fig3b") {
        const ScanResult scan = run_scenario(sc, Task::EprSweep);
        write_out(written, base + ".csv", csv_from_scan(scan));
        write_out(written, base + ".svg",
                  emit_svg(select_columns(scan, {"shift"}), PlotStyle::Line));
        FitData data{scan.values[0], scan.values[1], {}};
        const GaussianDerivativeFit fit = fit_gaussian_derivative(data);
        write_out(written, base + "_fit.csv",
                  gaussian_derivative_fit_csv(fit, "Hz", "Hz"));
    } else if (figure_id == "fig5") {
        const ScanResult scan = run_scenario(sc, Task::SaturationSeries);
        write_out(written, base + ".csv", csv_from_scan(scan));
        write_out(written, base + ".svg",
                  emit_svg(select_columns(scan, {"epr_p2p", "odmr_amp"}), PlotStyle::Line));
        FitData epr{scan.values[0], scan.values[1], {}};
        FitData odmr{scan.values[0], scan.values[2], {}};
        write_out(written, base + "_epr_fit.csv",
                  saturation_fit_csv(fit_saturation(epr), "Hz"));
        write_out(written, base + "_odmr_fit.csv",
                  saturation_fit_csv(fit_saturation(odmr), "Hz"));
    } else { // fig6b, fig6e
        const ScanResult scan = run_scenario(sc, Task::OdmrMap);
        write_out(written, base + ".csv", csv_from_scan(scan));
        write_out(written, base + "_amplitude.svg",
                  emit_svg(select_columns(scan, {"amplitude"}), PlotStyle::Heatmap));
        write_out(written, base + "_phase.svg",
                  emit_svg(select_columns(scan, {"phase"}), PlotStyle::Heatmap));
    }
    return written;
}

} // namespace modr
