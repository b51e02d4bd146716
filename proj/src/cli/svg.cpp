#include "lockscale/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lockscale/errors.hpp"

namespace lockscale::cli {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(std::span<const PlotSeries> series, const PlotOptions& opt) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_hi = 0.0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (opt.log_x && !(x > 0.0)) throw InvalidParameter("log-x plot needs positive x values");
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0.0, x_hi = 1.0;
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= 0.0) y_hi = 1.0;
  y_hi *= 1.05;

  const double left = 80, right = 180, top = 40, bottom = 60;
  const double plot_w = opt.width - left - right;
  const double plot_h = opt.height - top - bottom;
  auto fx = [&](double x) {
    const double t = opt.log_x ? (std::log(x) - std::log(x_lo)) / (std::log(x_hi) - std::log(x_lo))
                               : (x - x_lo) / (x_hi - x_lo);
    return left + t * plot_w;
  };
  auto fy = [&](double y) { return top + plot_h - (y / y_hi) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) {
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(opt.title) << "</text>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
     << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << top + plot_h << "\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double t = static_cast<double>(i) / kTicks;
    const double xv = opt.log_x ? std::exp(std::log(x_lo) + t * (std::log(x_hi) - std::log(x_lo)))
                                : x_lo + t * (x_hi - x_lo);
    const double yv = t * y_hi;
    os << "<text x=\"" << fx(xv) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fy(yv) + 4 << "\" text-anchor=\"end\">"
       << tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << opt.height - 16
     << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << top + plot_h / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(opt.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (s.markers) {
      for (const auto& [x, y] : s.points) {
        os << "<circle cx=\"" << fx(x) << "\" cy=\"" << fy(y) << "\" r=\"3\" fill=\"" << color
           << "\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : s.points) os << fx(x) << ',' << fy(y) << ' ';
      os << "\"/>\n";
    }
    const double ly = top + 14 + 18 * static_cast<double>(i);
    os << "<rect x=\"" << left + plot_w + 16 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
       << color << "\"/>\n";
    os << "<text x=\"" << left + plot_w + 34 << "\" y=\"" << ly + 1 << "\">" << escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lockscale::cli
