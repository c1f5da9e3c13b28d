#include "slowfast/svg.hpp"

#include "slowfast/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace slowfast {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double map(double v, double pix_lo, double pix_hi) const {
    double t = log ? (std::log10(v) - std::log10(lo)) /
                         (std::log10(hi) - std::log10(lo))
                   : (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int e_lo = static_cast<int>(std::floor(std::log10(lo)));
      const int e_hi = static_cast<int>(std::ceil(std::log10(hi)));
      for (int e = e_lo; e <= e_hi; ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * 0.999 && v <= hi * 1.001) out.push_back(v);
      }
      if (out.size() < 2) out = {lo, hi};
    } else {
      const double span = hi - lo;
      const double raw = span / 5.0;
      const double mag = std::pow(10.0, std::floor(std::log10(raw)));
      double step = mag;
      for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
          step = m * mag;
          break;
        }
      }
      for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span;
           v += step)
        out.push_back(v);
    }
    return out;
  }
};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path,
                    const std::vector<double>& x,
                    const std::vector<std::vector<double>>& series,
                    const std::vector<std::string>& names,
                    const PlotSpec& spec) {
  if (x.empty() || series.empty())
    throw std::invalid_argument("plot needs at least one point");
  for (const auto& s : series)
    if (s.size() != x.size())
      throw std::invalid_argument("series length mismatch");

  Axis ax{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), spec.log_x};
  Axis ay{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), spec.log_y};
  for (double v : x) {
    if (spec.log_x && !(v > 0)) throw std::invalid_argument("log-x needs v>0");
    ax.lo = std::min(ax.lo, v);
    ax.hi = std::max(ax.hi, v);
  }
  for (const auto& s : series)
    for (double v : s) {
      if (spec.log_y && !(v > 0))
        throw std::invalid_argument("log-y needs v>0");
      ay.lo = std::min(ay.lo, v);
      ay.hi = std::max(ay.hi, v);
    }
  if (ax.lo == ax.hi) {
    ax.lo -= 0.5;
    ax.hi += 0.5;
  }
  if (ay.lo == ay.hi) {
    ay.lo -= 0.5;
    ay.hi += 0.5;
  }
  if (!spec.log_y) {
    const double pad = 0.05 * (ay.hi - ay.lo);
    ay.lo -= pad;
    ay.hi += pad;
  }

  const double px_lo = kMarginLeft, px_hi = kWidth - kMarginRight;
  const double py_lo = kHeight - kMarginBottom, py_hi = kMarginTop;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << spec.title
      << "</text>\n";

  // axes
  out << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_hi
      << "\" y2=\"" << py_lo << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_lo
      << "\" y2=\"" << py_hi << "\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double px = ax.map(t, px_lo, px_hi);
    out << "<line x1=\"" << px << "\" y1=\"" << py_lo << "\" x2=\"" << px
        << "\" y2=\"" << py_lo + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << py_lo + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t, py_lo, py_hi);
    out << "<line x1=\"" << px_lo - 5 << "\" y1=\"" << py << "\" x2=\"" << px_lo
        << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px_lo - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << tick_label(t) << "</text>\n";
  }
  out << "<text x=\"" << (px_lo + px_hi) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << spec.x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << (py_lo + py_hi) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << (py_lo + py_hi) / 2 << ")\">" << spec.y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    if (spec.scatter) {
      for (std::size_t i = 0; i < x.size(); ++i)
        out << "<circle cx=\"" << ax.map(x[i], px_lo, px_hi) << "\" cy=\""
            << ay.map(series[s][i], py_lo, py_hi) << "\" r=\"2.5\" fill=\""
            << color << "\"/>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < x.size(); ++i)
        out << ax.map(x[i], px_lo, px_hi) << ","
            << ay.map(series[s][i], py_lo, py_hi) << " ";
      out << "\"/>\n";
    }
    if (s < names.size() && !names[s].empty()) {
      const double ly = kMarginTop + 16.0 * (s + 1);
      out << "<rect x=\"" << px_hi - 130 << "\" y=\"" << ly - 9
          << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
      out << "<text x=\"" << px_hi - 112 << "\" y=\"" << ly
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << names[s]
          << "</text>\n";
    }
  }
  out << "</svg>\n";
}

void plot_csv_columns(const std::filesystem::path& csv_path,
                      const std::filesystem::path& svg_path,
                      const std::string& x_column,
                      const std::vector<std::string>& y_columns,
                      const PlotSpec& spec) {
  const CsvTable t = CsvTable::read(csv_path);
  const int xc = t.column(x_column);
  if (xc < 0) throw std::invalid_argument("missing column " + x_column);
  std::vector<double> x(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) x[r] = t.number(r, xc);
  std::vector<std::vector<double>> series;
  for (const auto& name : y_columns) {
    const int yc = t.column(name);
    if (yc < 0) throw std::invalid_argument("missing column " + name);
    std::vector<double> y(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) y[r] = t.number(r, yc);
    series.push_back(std::move(y));
  }
  write_svg_plot(svg_path, x, series, y_columns, spec);
}

}  // namespace slowfast
