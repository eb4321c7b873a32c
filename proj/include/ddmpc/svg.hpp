#pragma once

// Hand-emitted SVG line plots: axes with ticks, one polyline per series, and
// a text legend. No plotting dependency.

#include <string>
#include <vector>

namespace ddmpc {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // same length as x
};

// Writes a standalone SVG file. Throws io_error on IO failure or when a
// series is ragged or everything is empty.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, int width = 840,
                    int height = 520);

}  // namespace ddmpc
