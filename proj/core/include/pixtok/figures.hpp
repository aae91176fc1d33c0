#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pixtok {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool markers = false;  // draw points as well as lines
  bool log_x = false;
};

// "series,x,y" rows.
std::string figure_csv(const Figure& fig);
// Self-contained SVG: axes with labels and ticks, one polyline per series and
// a legend. Output depends only on the figure contents.
std::string figure_svg(const Figure& fig);
// Writes <stem>.csv and <stem>.svg.
void export_figure(const Figure& fig, const std::filesystem::path& stem);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pixtok
