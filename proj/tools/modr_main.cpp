#include "modr/config.hpp"
#include "modr/csv.hpp"
#include "modr/fit.hpp"
#include "modr/runner.hpp"
#include "modr/svg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_io = 4;

modr::Scenario load_scenario(const std::string& config_path,
                             const std::optional<std::uint64_t>& seed) {
    modr::Scenario sc;
    if (!config_path.empty())
        sc = modr::parse_config(modr::read_text_file(config_path));
    if (seed)
        sc.seed = *seed;
    return sc;
}

std::vector<double> pick_column(const modr::CsvTable& csv, const std::string& name,
                                std::size_t fallback_index) {
    if (!name.empty())
        return csv.columns[csv.column(name)];
    if (fallback_index >= csv.columns.size())
        throw modr::io_error("CSV has too few columns");
    return csv.columns[fallback_index];
}

std::string column_unit(const modr::CsvTable& csv, const std::string& name,
                        std::size_t fallback_index) {
    const std::size_t idx = name.empty() ? fallback_index : csv.column(name);
    return idx < csv.units.size() ? csv.units[idx] : "";
}

std::string fit_result_csv(const modr::FitResult& fit,
                           const std::vector<std::string>& extra_names,
                           const std::vector<std::string>& extra_units,
                           const std::vector<double>& extra_values,
                           const std::vector<std::string>& units) {
    modr::ScanResult sheet;
    sheet.scenario_id = "fit";
    sheet.axis1 = {"row", "", {0.0, 1.0}};
    for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
        sheet.value_names.push_back(fit.param_names[i]);
        sheet.value_units.push_back(i < units.size() ? units[i] : "");
        sheet.values.push_back(
            {fit.params[i], i < fit.stderrs.size() ? fit.stderrs[i] : 0.0});
    }
    for (std::size_t i = 0; i < extra_names.size(); ++i) {
        sheet.value_names.push_back(extra_names[i]);
        sheet.value_units.push_back(i < extra_units.size() ? extra_units[i] : "");
        sheet.values.push_back({extra_values[i], 0.0});
    }
    std::string head = "# converged: " + std::string(fit.converged ? "yes" : "no") +
                       ", iterations: " + std::to_string(fit.n_iter) + "\n";
    if (!fit.message.empty())
        head += "# note: " + fit.message + "\n";
    head += "# rows: 0 = value, 1 = stderr\n";
    return head + modr::csv_from_scan(sheet);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microwave-optical double resonance simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the scenario seed");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a scan task from a scenario");
    std::string sim_task, sim_config, sim_out, sim_svg;
    simulate->add_option("task", sim_task,
                         "spectrum-map | epr-sweep | odmr-map | saturation-series | "
                         "fsr-analysis")
        ->required();
    simulate->add_option("--config", sim_config, "scenario file (defaults apply if omitted)");
    simulate->add_option("--out", sim_out, "output CSV path")->required();
    simulate->add_option("--svg", sim_svg, "also render an SVG plot");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a model to CSV data");
    std::string fit_model, fit_in, fit_out, xcol, ycol;
    bool fit_decaying = false, fit_rising = false;
    fit->add_option("--model", fit_model, "gaussian-derivative | saturation | reflection-dip")
        ->required();
    fit->add_option("--in", fit_in, "input CSV")->required();
    fit->add_option("--out", fit_out, "output CSV (stdout if omitted)");
    fit->add_option("--xcol", xcol, "x column name (default: first column)");
    fit->add_option("--ycol", ycol, "y column name (default: second column)");
    fit->add_flag("--decaying", fit_decaying, "force the decaying saturation model");
    fit->add_flag("--rising", fit_rising, "force the rising saturation model");

    // analyze fsr
    auto* analyze = app.add_subcommand("analyze", "derived analyses");
    auto* fsr = analyze->add_subcommand("fsr", "group velocity dispersion from an FSR table");
    std::string fsr_in, fsr_radius = "2.1 mm", fsr_out;
    fsr->add_option("--in", fsr_in, "FSR table CSV (columns m, fsr, sigma)")->required();
    fsr->add_option("--radius", fsr_radius, "resonator major radius, e.g. \"2.1 mm\"");
    fsr->add_option("--out", fsr_out, "output CSV (stdout if omitted)");

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "run a bundled figure pipeline");
    std::string rep_id, rep_outdir = ".";
    rep->add_option("figure", rep_id, "fig3a | fig3b | fig4 | fig5 | fig6b | fig6e")
        ->required();
    rep->add_option("--outdir", rep_outdir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const modr::Task task = modr::task_from_name(sim_task);
            const modr::Scenario sc = load_scenario(sim_config, seed);
            const modr::ScanResult scan = modr::run_scenario(sc, task);
            for (const auto& w : scan.warnings)
                std::cerr << "warning: " << w << "\n";
            modr::write_text_file(sim_out, modr::csv_from_scan(scan));
            if (!sim_svg.empty()) {
                const modr::PlotStyle style =
                    scan.axis2 ? modr::PlotStyle::Heatmap : modr::PlotStyle::Line;
                modr::ScanResult plot = scan;
                if (scan.axis2 && scan.values.size() > 1)
                    plot = modr::select_columns(scan, {scan.value_names[0]});
                modr::write_text_file(sim_svg, modr::emit_svg(plot, style));
            }
        } else if (*fit) {
            const modr::CsvTable csv = modr::read_csv_file(fit_in);
            modr::FitData data;
            data.x = pick_column(csv, xcol, 0);
            data.y = pick_column(csv, ycol, 1);
            const std::string xunit = column_unit(csv, xcol, 0);
            const std::string yunit = column_unit(csv, ycol, 1);

            std::string text;
            if (fit_model == "gaussian-derivative") {
                const modr::GaussianDerivativeFit g = modr::fit_gaussian_derivative(data);
                text = fit_result_csv(
                    g.fit, {"fwhm", "peak_to_peak", "extremum_separation"},
                    {xunit, yunit, xunit},
                    {g.fwhm, g.peak_to_peak, g.extremum_separation},
                    {yunit, xunit, xunit, yunit});
                if (!g.fit.converged)
                    throw modr::numeric_error("gaussian-derivative fit did not converge: " +
                                              g.fit.message);
            } else if (fit_model == "saturation") {
                if (xunit == "dBm")
                    for (double& p : data.x)
                        p = modr::dbm_to_watts(modr::dbm(p)).value;
                const modr::SaturationFit s =
                    (fit_decaying || fit_rising)
                        ? modr::fit_saturation(data, fit_decaying)
                        : modr::fit_saturation(data);
                text = fit_result_csv(s.fit, {"p_sat_w", "p_sat_dbm"}, {"W", "dBm"},
                                      {s.p_sat_watts, s.p_sat_dbm}, {yunit, "W"});
                if (!s.fit.converged)
                    throw modr::numeric_error("saturation fit did not converge: " +
                                              s.fit.message);
            } else if (fit_model == "reflection-dip") {
                const modr::ReflectionDipFit d = modr::fit_reflection_dip(data);
                text = fit_result_csv(d.fit,
                                      {"kappa_int_alt", "kappa_ext_alt"}, {xunit, xunit},
                                      {d.swapped.param("kappa_int"),
                                       d.swapped.param("kappa_ext")},
                                      {xunit, xunit, xunit});
                if (!d.fit.converged)
                    throw modr::numeric_error("reflection-dip fit did not converge: " +
                                              d.fit.message);
            } else {
                throw modr::config_error("unknown fit model '" + fit_model + "'", 0, 0);
            }
            if (fit_out.empty())
                std::cout << text;
            else
                modr::write_text_file(fit_out, text);
        } else if (*fsr) {
            const modr::Quantity radius = modr::parse_quantity(fsr_radius);
            const modr::FsrTable table =
                modr::fsr_table_from_csv(modr::read_csv_file(fsr_in));
            modr::ScanResult res = modr::run_fsr_analysis(table, radius);
            res.scenario_id = "fsr-analysis";
            const std::string text = modr::csv_from_scan(res);
            if (fsr_out.empty())
                std::cout << text;
            else
                modr::write_text_file(fsr_out, text);
        } else if (*rep) {
            const std::vector<std::string> written =
                modr::reproduce(rep_id, rep_outdir, seed ? &*seed : nullptr);
            for (const auto& p : written)
                std::cout << p << "\n";
        }
    } catch (const modr::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const modr::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const modr::dimension_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const modr::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const modr::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}
