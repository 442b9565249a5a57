#pragma once

#include "modr/config.hpp"
#include "modr/csv.hpp"
#include "modr/fit.hpp"
#include "modr/scan.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace modr {

enum class Task { SpectrumMap, EprSweep, OdmrMap, SaturationSeries, FsrAnalysis };

Task task_from_name(std::string_view name);
std::string_view task_name(Task t);

/// Deterministic for fixed (scenario, task): identical values independent of
/// the thread count. Scenario noise is added after the grid is assembled,
/// from a single seeded stream in index order.
ScanResult run_scenario(const Scenario& scenario, Task task);

/// beta2 per consecutive FSR pair, in display units
/// (m, delta_fsr MHz, fsr_mean GHz, beta2 and sigma in fs^2/m).
ScanResult run_fsr_analysis(const FsrTable& table, const Quantity& radius);

FsrTable fsr_table_from_csv(const CsvTable& csv);

/// The measured TM-family FSR table bundled with the toolkit.
const std::string& bundled_fsr_csv();

/// Scenario texts for the bundled reproduction pipelines
/// (fig3a, fig3b, fig4, fig5, fig6b, fig6e).
const std::map<std::string, std::string>& bundled_scenarios();

/// Keeps only the named value columns of a scan (for single-plane plots).
ScanResult select_columns(const ScanResult& scan, const std::vector<std::string>& names);

/// Runs one bundled reproduction pipeline and writes its CSV/SVG/fit outputs
/// under `outdir`. Returns the written paths.
std::vector<std::string> reproduce(const std::string& figure_id, const std::string& outdir,
                                   const std::uint64_t* seed_override = nullptr);

} // namespace modr
