#include "gendyn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gendyn/matrix_io.hpp"

namespace gendyn::svg {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

double tx(double v, bool log_scale) {
  if (!log_scale) return v;
  return std::log10(std::max(v, 1e-300));
}

}  // namespace

void write_line_plot(const std::string& path, const std::vector<Series>& series,
                     const PlotOptions& opt) {
  const int ml = 60, mr = 20, mt = 30, mb = 45;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x = tx(s.x[i], opt.log_x), y = tx(s.y[i], opt.log_y);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (opt.log_x && s.x[i] <= 0) continue;
      if (opt.log_y && s.y[i] <= 0) continue;
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymax > ymin)) { ymin -= 0.5; ymax += 0.5; }
  const double xpad = 0.02 * (xmax - xmin), ypad = 0.04 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  auto px = [&](double x) { return ml + (tx(x, opt.log_x) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (tx(y, opt.log_y) - ymin) / (ymax - ymin) * ph; };

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << opt.width
      << "' height='" << opt.height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << opt.width / 2 << "' y='18' text-anchor='middle' "
         "font-family='sans-serif' font-size='13'>" << opt.title << "</text>\n"
      << "<text x='" << ml + pw / 2 << "' y='" << opt.height - 8
      << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
      << opt.x_label << (opt.log_x ? " (log)" : "") << "</text>\n"
      << "<text x='14' y='" << mt + ph / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='11' "
         "transform='rotate(-90 14 " << mt + ph / 2 << ")'>"
      << opt.y_label << (opt.log_y ? " (log)" : "") << "</text>\n"
      << "<rect x='" << ml << "' y='" << mt << "' width='" << pw << "' height='"
      << ph << "' fill='none' stroke='#333'/>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kColors[ci % 8];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((opt.log_x && s.x[i] <= 0) || (opt.log_y && s.y[i] <= 0)) continue;
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << ml + 8 << "' y='" << mt + 16 + 14 * ci
        << "' font-family='sans-serif' font-size='11' fill='" << color << "'>"
        << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
  io::write_text_atomic(path, out.str());
}

}  // namespace gendyn::svg
