#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "canard/errors.hpp"

namespace cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::fabs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

// 1-2-5 tick spacing giving about n ticks.
double nice_step(double span, int n) {
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

void panel(std::ostringstream& os, const Panel& p, double ox, double w, double h) {
  const double ml = 58, mr = 14, mt = 28, mb = 44;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  const double px = 0.05 * std::max(x1 - x0, 1e-9), py = 0.05 * std::max(y1 - y0, 1e-9);
  x0 -= px, x1 += px, y0 -= py, y1 += py;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto X = [&](double x) { return ox + ml + (x - x0) / (x1 - x0) * pw; };
  auto Y = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

  os << "<rect x=\"" << num(ox + ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const double sx = nice_step(x1 - x0, 5), sy = nice_step(y1 - y0, 5);
  for (double t = std::ceil(x0 / sx) * sx; t <= x1; t += sx)
    os << "<text x=\"" << num(X(t)) << "\" y=\"" << num(mt + ph + 16) << "\" font-size=\"11\" text-anchor=\"middle\">"
       << tick(t) << "</text>\n";
  for (double t = std::ceil(y0 / sy) * sy; t <= y1; t += sy)
    os << "<text x=\"" << num(ox + ml - 6) << "\" y=\"" << num(Y(t) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
       << tick(t) << "</text>\n";
  os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(h - 8)
     << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(p.xlabel) << "</text>\n";
  os << "<text x=\"" << num(ox + 14) << "\" y=\"" << num(mt + ph / 2) << "\" font-size=\"13\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 " << num(ox + 14) << " " << num(mt + ph / 2) << ")\">" << escape(p.ylabel)
     << "</text>\n";
  os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">"
     << escape(p.title) << "</text>\n";

  int legend = 0;
  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          os << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
             << "\"/>\n";
    } else if (n > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.width) << "\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << " points=\"";
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << num(X(s.x[i])) << "," << num(Y(s.y[i])) << " ";
      os << "\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = mt + 14 + 15 * legend++;
      os << "<line x1=\"" << num(ox + ml + 8) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(ox + ml + 30)
         << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
         << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
      os << "<text x=\"" << num(ox + ml + 34) << "\" y=\"" << num(ly) << "\" font-size=\"11\">" << escape(s.label)
         << "</text>\n";
    }
  }
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, double w, double h) {
  std::ostringstream os;
  const double total = w * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(total) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(total) << " " << num(h) << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) panel(os, panels[i], w * static_cast<double>(i), w, h);
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::string& path, const std::vector<Panel>& panels) {
  std::ofstream out(path);
  if (!out) throw canard::ConfigError("cannot write '" + path + "'");
  out << render_svg(panels);
}

}  // namespace cli
