#include "ssg/plot.hpp"

#include "ssg/image_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssg {

namespace {

constexpr const char *kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
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

bool usable(double x, double y) { return std::isfinite(x) && std::isfinite(y) && y > 0.0; }

void render_panel(std::string &svg, const Panel &p, int top, int width, int height) {
  const int ml = 70, mr = 120, mt = 28, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series &s : p.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.1;
    ymax = 1.0;
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  const int d0 = static_cast<int>(std::floor(std::log10(ymin)));
  int d1 = static_cast<int>(std::ceil(std::log10(ymax)));
  if (d1 <= d0) d1 = d0 + 1;

  auto X = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
  auto Y = [&](double y) { return top + mt + ph * (d1 - std::log10(y)) / (d1 - d0); };

  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", ml + pw / 2,
                     top + 18, escape(p.title));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000\"/>\n", ml,
                     top + mt, pw, ph);
  const int step = std::max(1, (d1 - d0) / 8);
  for (int d = d0; d <= d1; d += step) {
    const double y = Y(std::pow(10.0, d));
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", ml, y, ml + pw, y);
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"11\">1e{}</text>\n", ml - 6,
                       y + 4, d);
  }
  for (int t = 0; t <= 5; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 5.0;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{:.3g}</text>\n", X(xv),
                       top + mt + ph + 16, xv);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n", ml + pw / 2,
                     top + height - 6, escape(p.xlabel));
  svg += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" "
                     "transform=\"rotate(-90 16 {})\">{}</text>\n",
                     top + mt + ph / 2, top + mt + ph / 2, escape(p.ylabel));

  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const Series &s = p.series[si];
    const char *color = kColors[si % std::size(kColors)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) {
        flush();
        continue;
      }
      pts += fmt::format("{:.2f},{:.2f} ", X(s.x[i]), Y(s.y[i]));
    }
    flush();
    const double ly = top + mt + 14 + 18.0 * si;
    svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       ml + pw + 10, ly, ml + pw + 30, ly, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n", ml + pw + 35, ly + 4, escape(s.name));
  }
}

} // namespace

std::string render_svg(const std::vector<Panel> &panels, int width, int panel_height) {
  const int height = panel_height * static_cast<int>(std::max<std::size_t>(1, panels.size()));
  std::string svg = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                                "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\">\n"
                                "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n",
                                width, height);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(svg, panels[i], static_cast<int>(i) * panel_height, width, panel_height);
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<Panel> convergence_panels(const std::vector<std::pair<std::string, std::vector<TraceRecord>>> &runs) {
  Panel e{"relative error e^k", "time (s)", "e^k", {}};
  Panel f{"relative objective gap f^k", "time (s)", "f^k", {}};
  for (const auto &[name, trace] : runs) {
    Series se{name, {}, {}}, sf{name, {}, {}};
    for (const TraceRecord &r : trace) {
      se.x.push_back(r.time_s);
      se.y.push_back(r.e_k);
      sf.x.push_back(r.time_s);
      sf.y.push_back(r.f_k);
    }
    e.series.push_back(std::move(se));
    f.series.push_back(std::move(sf));
  }
  return {e, f};
}

void write_svg(const std::filesystem::path &path, const std::vector<Panel> &panels) {
  write_file_atomic(path, render_svg(panels));
}

} // namespace ssg
