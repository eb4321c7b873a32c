#include "ddmpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ddmpc/errors.hpp"

namespace ddmpc {

namespace {

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3f8f3f", "#8458b3",
                          "#c98a1e", "#2aa198", "#6b6b6b", "#aa3377"};
constexpr int kPaletteSize = 8;

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, int width,
                    int height) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  bool any = false;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw io_error("svg series '" + s.label + "' is ragged");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
      any = true;
    }
  }
  if (!any) throw io_error("svg plot '" + path + "' has no data points");
  if (x_hi - x_lo < 1e-12) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  const double ml = 78, mr = 24, mt = 46, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) {
    return mt + (y_hi - y) / (y_hi - y_lo) * ph;
  };

  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2.0 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">"
     << esc(title) << "</text>\n";

  const int ticks = 5;
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= ticks; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / ticks;
    const double yv = y_lo + (y_hi - y_lo) * i / ticks;
    const double gx = px(xv), gy = py(yv);
    os << "<line x1=\"" << num(gx) << "\" y1=\"" << mt << "\" x2=\"" << num(gx)
       << "\" y2=\"" << mt + ph << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << num(gy) << "\" x2=\"" << ml + pw
       << "\" y2=\"" << num(gy)
       << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << num(gx) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << num(gy + 4)
       << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">"
     << esc(x_label) << "</text>\n";
  os << "<text x=\"20\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\" transform=\"rotate(-90 20 "
     << mt + ph / 2 << ")\">" << esc(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    if (s.x.empty()) continue;
    const char* color = kPalette[si % kPaletteSize];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) os << ' ';
      os << num(px(s.x[i])) << ',' << num(py(s.y[i]));
    }
    os << "\"/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(si);
    os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << num(ly - 4)
       << "\" x2=\"" << ml + pw - 126 << "\" y2=\"" << num(ly - 4)
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw - 120 << "\" y=\"" << num(ly)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw io_error("failed writing '" + path + "'");
}

}  // namespace ddmpc
