#include "qdrive/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qdrive {

namespace {

const char* kSeriesColors[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4",
                               "#8c613c", "#dc7ec0", "#797979"};

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Shade a base color toward white for stack segments above the first.
std::string shade(const std::string& hex, int segment, int segments) {
  if (segments <= 1 || segment == 0) return hex;
  int r = std::stoi(hex.substr(1, 2), nullptr, 16);
  int g = std::stoi(hex.substr(3, 2), nullptr, 16);
  int b = std::stoi(hex.substr(5, 2), nullptr, 16);
  double f = 0.55 * segment / std::max(1, segments - 1);
  r = static_cast<int>(r + (255 - r) * f);
  g = static_cast<int>(g + (255 - g) * f);
  b = static_cast<int>(b + (255 - b) * f);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_bar_chart(const BarChartSpec& spec) {
  const size_t groups = spec.group_labels.size();
  const size_t series = spec.series_labels.size();
  const size_t segments = spec.segment_labels.size();
  if (groups == 0 || series == 0 || segments == 0) {
    throw std::invalid_argument("render_bar_chart: empty labels");
  }
  if (spec.values.size() != groups) {
    throw std::invalid_argument("render_bar_chart: values/groups mismatch");
  }
  double data_max = 0.0;
  for (const auto& per_group : spec.values) {
    if (per_group.size() != series) {
      throw std::invalid_argument("render_bar_chart: values/series mismatch");
    }
    for (const auto& per_series : per_group) {
      if (per_series.size() != segments) {
        throw std::invalid_argument("render_bar_chart: values/segments mismatch");
      }
      double total = 0.0;
      for (double v : per_series) {
        if (v < 0.0 || !std::isfinite(v)) {
          throw std::invalid_argument("render_bar_chart: values must be finite and >= 0");
        }
        total += v;
      }
      data_max = std::max(data_max, total);
    }
  }
  double y_max = spec.y_max > 0.0 ? spec.y_max : (data_max > 0.0 ? data_max * 1.08 : 1.0);

  const double width = 880, height = 500;
  const double left = 70, right = 190, top = 56, bottom = 64;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double y0 = top + plot_h;  // x axis line

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"28\" font-family=\"sans-serif\" "
         "font-size=\"17\" text-anchor=\"middle\">" + esc(spec.title) + "</text>\n";

  // y axis with 5 ticks and a light grid
  for (int tick = 0; tick <= 5; ++tick) {
    double frac = tick / 5.0;
    double y = y0 - frac * plot_h;
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + plot_w) +
           "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           num(frac * y_max) + "</text>\n";
  }
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(y0) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(left + plot_w) +
         "\" y2=\"" + num(y0) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"18\" y=\"" + num(top + plot_h / 2) + "\" font-family=\"sans-serif\" "
         "font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(top + plot_h / 2) + ")\">" + esc(spec.y_label) + "</text>\n";
  svg += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 16) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
         esc(spec.x_label) + "</text>\n";

  const double group_w = plot_w / groups;
  const double gap = group_w * 0.18;
  const double bar_w = (group_w - 2 * gap) / series;
  for (size_t gi = 0; gi < groups; ++gi) {
    double gx = left + gi * group_w;
    svg += "<text x=\"" + num(gx + group_w / 2) + "\" y=\"" + num(y0 + 20) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           esc(spec.group_labels[gi]) + "</text>\n";
    for (size_t si = 0; si < series; ++si) {
      double x = gx + gap + si * bar_w;
      double base = y0;
      for (size_t ki = 0; ki < segments; ++ki) {
        double v = spec.values[gi][si][ki];
        double h = y_max > 0 ? v / y_max * plot_h : 0.0;
        if (h > 0.0) {
          svg += "<rect x=\"" + num(x) + "\" y=\"" + num(base - h) + "\" width=\"" +
                 num(bar_w * 0.92) + "\" height=\"" + num(h) + "\" fill=\"" +
                 shade(kSeriesColors[si % 8], static_cast<int>(ki), static_cast<int>(segments)) +
                 "\"/>\n";
        }
        base -= h;
      }
    }
  }

  // legend: series swatches, then segment shades when stacked
  double ly = top + 4;
  double lx = left + plot_w + 18;
  for (size_t si = 0; si < series; ++si) {
    svg += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" width=\"14\" height=\"14\" fill=\"" +
           std::string(kSeriesColors[si % 8]) + "\"/>\n";
    svg += "<text x=\"" + num(lx + 20) + "\" y=\"" + num(ly + 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + esc(spec.series_labels[si]) +
           "</text>\n";
    ly += 20;
  }
  if (segments > 1) {
    ly += 8;
    for (size_t ki = 0; ki < segments; ++ki) {
      svg += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly) +
             "\" width=\"14\" height=\"14\" fill=\"" +
             shade("#777777", static_cast<int>(ki), static_cast<int>(segments)) +
             "\" stroke=\"#333333\" stroke-width=\"0.5\"/>\n";
      svg += "<text x=\"" + num(lx + 20) + "\" y=\"" + num(ly + 12) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + esc(spec.segment_labels[ki]) +
             "</text>\n";
      ly += 20;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace qdrive
