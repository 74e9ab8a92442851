#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinn/io.hpp"

namespace spinn {

struct LabelledCurve {
  std::string label;
  ErrorCurve curve;
};

/// Line chart of eps_component against t for each curve, as an SVG document.
std::string error_curves_svg(const std::vector<LabelledCurve>& curves, int component = 1);

/// Binary PPM with three panels side by side: truth, lifted observation and
/// prediction of one velocity component, on a shared diverging colour scale.
std::vector<std::uint8_t> heatmap_triptych_ppm(const VectorField& truth, const LowResFrame& low,
                                               const VectorField& prediction, int component,
                                               int scale = 8);

}  // namespace spinn
