#include "micdist/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "micdist/csv.hpp"

namespace micdist {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 55;
constexpr std::array<const char*, 6> kColors = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

void write_svg(std::ostream& out, const LineChart& chart) {
  auto tx = [&](double x) { return chart.log_x ? std::log10(x) : x; };
  auto usable = [&](const std::pair<double, double>& p) {
    return std::isfinite(p.first) && std::isfinite(p.second) &&
           (!chart.log_x || p.first > 0.0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (const auto& p : s.points) {
      if (!usable(p)) continue;
      x0 = std::min(x0, tx(p.first));
      x1 = std::max(x1, tx(p.first));
      y0 = std::min(y0, p.second);
      y1 = std::max(y1, p.second);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape(chart.title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double ystep = nice_step(y1 - y0);
  for (double y = std::ceil(y0 / ystep) * ystep; y <= y1; y += ystep) {
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\""
        << py(y) << "\" y2=\"" << py(y) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(y) + 4
        << "\" text-anchor=\"end\">" << format_number(std::round(y / ystep) * ystep)
        << "</text>\n";
  }
  const double xstep = chart.log_x ? 1.0 : nice_step(x1 - x0);
  for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-12; x += xstep) {
    const double value = chart.log_x ? std::pow(10.0, x) : x;
    const double sx = kLeft + (x - x0) / (x1 - x0) * pw;
    out << "<line x1=\"" << sx << "\" x2=\"" << sx << "\" y1=\"" << kTop
        << "\" y2=\"" << kTop + ph << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << sx << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\">" << format_number(value) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(chart.y_label)
      << "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kColors[i % kColors.size()];
    if (s.markers) {
      for (const auto& p : s.points) {
        if (!usable(p)) continue;
        out << "<circle cx=\"" << px(p.first) << "\" cy=\"" << py(p.second)
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : s.points) {
        if (usable(p)) out << px(p.first) << ',' << py(p.second) << ' ';
      }
      out << "\"/>\n";
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    out << "<rect x=\"" << kLeft + pw + 12 << "\" y=\"" << ly - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << kLeft + pw + 30 << "\" y=\"" << ly + 1 << "\">"
        << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace micdist
