#pragma once

// Minimal self-contained SVG writers for the figure artifacts: heatmaps,
// labeled scatter plots, and line charts. No styling dependencies.

#include <string>
#include <vector>

namespace ccount::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// data is row-major [rows x cols]; color-mapped over [min, max].
std::string heatmap(const std::vector<double>& data, int rows, int cols,
                    const std::string& title, int width = 640, int height = 520);

// One dot per point; points with the same integer label share a color.
std::string scatter(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<int>& labels,
                    const std::vector<std::string>& label_names,
                    const std::string& title, int width = 640, int height = 520);

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       int width = 640, int height = 520);

void write_file(const std::string& path, const std::string& content);

}  // namespace ccount::svg
