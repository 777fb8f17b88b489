#pragma once

#include <string>
#include <vector>

namespace gsnr {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgChart {
  std::string title;
  std::string xLabel;
  std::string yLabel;
  std::vector<SvgSeries> series;
};

/// SVG 1.1 line chart: one polyline per series (a marker for single points),
/// axis labels and a legend. Byte-identical output for identical input.
std::string renderSvg(const SvgChart& chart);
void writeSvg(const SvgChart& chart, const std::string& path);

}  // namespace gsnr
