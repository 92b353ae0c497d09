#pragma once

#include <string>

#include "ptpb/pipeline.hpp"
#include "ptpb/simulate.hpp"

namespace ptpb {

/// Self-contained static SVG: one panel per joint with q and q_r over time,
/// plus a panel of ||e|| on a log scale, each with a vertical marker at the end
/// of the settling window t0 + T.
void write_tracking_svg(const std::string& path, const SimResult& result, const Reference& ref,
                        double t0, double T);

}  // namespace ptpb
