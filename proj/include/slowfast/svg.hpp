#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace slowfast {

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool scatter = false;
};

// Minimal single-panel SVG chart; one polyline (or point set) per series.
void write_svg_plot(const std::filesystem::path& path,
                    const std::vector<double>& x,
                    const std::vector<std::vector<double>>& series,
                    const std::vector<std::string>& names,
                    const PlotSpec& spec);

// Reads metrics.csv and plots the named y-columns against the x-column.
// Plots are derived from the CSV alone so they can be regenerated later.
void plot_csv_columns(const std::filesystem::path& csv_path,
                      const std::filesystem::path& svg_path,
                      const std::string& x_column,
                      const std::vector<std::string>& y_columns,
                      const PlotSpec& spec);

}  // namespace slowfast
