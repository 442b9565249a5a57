#pragma once

#include "modr/scan.hpp"

#include <string>

namespace modr {

enum class PlotStyle { Line, Heatmap };

/// Standalone SVG 1.1 document. Line style plots every value column against
/// axis1; heatmap renders the first value column over (axis1, axis2) with a
/// monotone-luminance colormap. Byte-deterministic for identical input.
std::string emit_svg(const ScanResult& scan, PlotStyle style);

} // namespace modr
