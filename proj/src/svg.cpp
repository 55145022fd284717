#include "ccount/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ccount::svg {

namespace {

constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#4063d8", "#d86040", "#3ba458", "#9558b2",
                          "#c7a52b", "#46b4c8", "#d860a8", "#7a7a7a",
                          "#203864", "#8b3a2a"};
constexpr int kPaletteSize = 10;

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void open_doc(std::ostringstream& os, int width, int height,
              const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">"
     << esc(title) << "</text>\n";
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (hi <= lo) hi = lo + 1.0;
    const double p = 0.05 * (hi - lo);
    lo -= p;
    hi += p;
  }
};

void axes(std::ostringstream& os, int width, int height, const Range& xr,
          const Range& yr, const std::string& x_label,
          const std::string& y_label) {
  const int x0 = kMarginLeft, x1 = width - kMarginRight;
  const int y0 = height - kMarginBottom, y1 = kMarginTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
     << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
     << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double px = x0 + (x1 - x0) * k / 4.0;
    const double py = y0 - (y0 - y1) * k / 4.0;
    os << "<text x=\"" << num(px) << "\" y=\"" << y0 + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << num(fx) << "</text>\n"
       << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << num(fy) << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << height - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << esc(x_label) << "</text>\n"
     << "<text x=\"16\" y=\"" << (y0 + y1) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        "transform=\"rotate(-90 16 "
     << (y0 + y1) / 2 << ")\">" << esc(y_label) << "</text>\n";
}

std::string viridis_like(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(68 + t * (253 - 68));
  const int g = static_cast<int>(1 + t * (231 - 1));
  const int b = static_cast<int>(84 + t * (37 - 84));
  std::ostringstream os;
  os << "rgb(" << r << "," << g << "," << b << ")";
  return os.str();
}

}  // namespace

std::string heatmap(const std::vector<double>& data, int rows, int cols,
                    const std::string& title, int width, int height) {
  if (rows < 1 || cols < 1 ||
      data.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("heatmap: data size does not match rows*cols");
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : data) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;

  std::ostringstream os;
  open_doc(os, width, height, title);
  const double x0 = kMarginLeft, y0 = kMarginTop;
  const double cw = (width - kMarginLeft - kMarginRight) / static_cast<double>(cols);
  const double ch = (height - kMarginTop - kMarginBottom) / static_cast<double>(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = data[static_cast<std::size_t>(i) * cols + j];
      const double t = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
      os << "<rect x=\"" << num(x0 + j * cw) << "\" y=\"" << num(y0 + i * ch)
         << "\" width=\"" << num(cw + 0.5) << "\" height=\"" << num(ch + 0.5)
         << "\" fill=\"" << viridis_like(t) << "\"/>\n";
    }
  }
  os << "<text x=\"" << kMarginLeft << "\" y=\"" << height - 12
     << "\" font-family=\"sans-serif\" font-size=\"11\">min " << num(lo)
     << ", max " << num(hi) << "</text>\n</svg>\n";
  return os.str();
}

std::string scatter(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<int>& labels,
                    const std::vector<std::string>& label_names,
                    const std::string& title, int width, int height) {
  if (x.size() != y.size() || x.size() != labels.size()) {
    throw std::invalid_argument("scatter: x, y, labels sizes differ");
  }
  Range xr, yr;
  if (!x.empty()) {
    xr = {x[0], x[0]};
    yr = {y[0], y[0]};
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    xr.expand(x[i]);
    yr.expand(y[i]);
  }
  xr.pad();
  yr.pad();

  std::ostringstream os;
  open_doc(os, width, height, title);
  axes(os, width, height, xr, yr, "component 1", "component 2");
  const double px0 = kMarginLeft, px1 = width - kMarginRight;
  const double py0 = height - kMarginBottom, py1 = kMarginTop;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sx = px0 + (x[i] - xr.lo) / (xr.hi - xr.lo) * (px1 - px0);
    const double sy = py0 - (y[i] - yr.lo) / (yr.hi - yr.lo) * (py0 - py1);
    const int li = ((labels[i] % kPaletteSize) + kPaletteSize) % kPaletteSize;
    os << "<circle cx=\"" << num(sx) << "\" cy=\"" << num(sy)
       << "\" r=\"3\" fill=\"" << kPalette[li] << "\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t k = 0; k < label_names.size(); ++k) {
    const double ly = kMarginTop + 14.0 * static_cast<double>(k);
    os << "<circle cx=\"" << width - 130 << "\" cy=\"" << num(ly)
       << "\" r=\"4\" fill=\"" << kPalette[k % kPaletteSize] << "\"/>\n"
       << "<text x=\"" << width - 120 << "\" y=\"" << num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << esc(label_names[k]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       int width, int height) {
  Range xr, yr;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("line_chart: series x/y size mismatch");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xr = {s.x[i], s.x[i]};
        yr = {s.y[i], s.y[i]};
        first = false;
      }
      xr.expand(s.x[i]);
      yr.expand(s.y[i]);
    }
  }
  xr.pad();
  yr.pad();

  std::ostringstream os;
  open_doc(os, width, height, title);
  axes(os, width, height, xr, yr, x_label, y_label);
  const double px0 = kMarginLeft, px1 = width - kMarginRight;
  const double py0 = height - kMarginBottom, py1 = kMarginTop;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[k % kPaletteSize]
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double sx = px0 + (s.x[i] - xr.lo) / (xr.hi - xr.lo) * (px1 - px0);
      const double sy = py0 - (s.y[i] - yr.lo) / (yr.hi - yr.lo) * (py0 - py1);
      os << num(sx) << "," << num(sy) << " ";
    }
    os << "\"/>\n";
    const double ly = kMarginTop + 14.0 * static_cast<double>(k);
    os << "<line x1=\"" << width - 150 << "\" y1=\"" << num(ly) << "\" x2=\""
       << width - 132 << "\" y2=\"" << num(ly) << "\" stroke=\""
       << kPalette[k % kPaletteSize] << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << width - 126 << "\" y=\"" << num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
}

}  // namespace ccount::svg
