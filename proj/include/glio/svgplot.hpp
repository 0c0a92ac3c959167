#pragma once

// ROC plot rendering to SVG: one panel per task, optionally several curves
// overlaid per panel, axes labeled "false positive rates" / "true positive
// rates", four panels arranged as a 2x2 grid.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "glio/error.hpp"
#include "glio/metrics.hpp"

namespace glio {

struct RocCurveSeries {
  std::string label;
  std::vector<RocPoint> points;
};

struct RocPanel {
  std::string title;
  std::vector<RocCurveSeries> curves;
};

namespace svg {

inline constexpr double kPanelSize = 320.0;
inline constexpr double kMarginLeft = 58.0;
inline constexpr double kMarginBottom = 52.0;
inline constexpr double kMarginTop = 34.0;
inline constexpr double kMarginRight = 16.0;

inline const char* series_color(size_t i) {
  static const char* kColors[] = {"#c0392b", "#2d6fa8", "#2f8f46", "#8e44ad", "#b07c1f"};
  return kColors[i % 5];
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace svg

inline void plot_roc_panels(const std::vector<RocPanel>& panels, const std::filesystem::path& out_path) {
  check_data(!panels.empty(), "plot_roc: no panels to draw");
  for (const auto& p : panels) {
    check_data(!p.curves.empty(), "plot_roc: panel '" + p.title + "' has no curves");
    for (const auto& c : p.curves)
      check_data(c.points.size() >= 2, "plot_roc: curve '" + c.label + "' has fewer than 2 points");
  }

  const int cols = panels.size() == 1 ? 1 : 2;
  const int rows = static_cast<int>((panels.size() + static_cast<size_t>(cols) - 1) / cols);
  const double cell_w = svg::kMarginLeft + svg::kPanelSize + svg::kMarginRight;
  const double cell_h = svg::kMarginTop + svg::kPanelSize + svg::kMarginBottom;

  std::ofstream f(out_path);
  if (!f) throw_data("plot_roc: cannot open for write: " + out_path.string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell_w << "\" height=\""
    << rows * cell_h << "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (size_t pi = 0; pi < panels.size(); ++pi) {
    const RocPanel& panel = panels[pi];
    const double ox = static_cast<double>(pi % static_cast<size_t>(cols)) * cell_w + svg::kMarginLeft;
    const double oy = static_cast<double>(pi / static_cast<size_t>(cols)) * cell_h + svg::kMarginTop;
    auto px = [&](double fpr) { return ox + fpr * svg::kPanelSize; };
    auto py = [&](double tpr) { return oy + (1.0 - tpr) * svg::kPanelSize; };

    f << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << svg::kPanelSize << "\" height=\""
      << svg::kPanelSize << "\" fill=\"none\" stroke=\"#333\"/>\n";
    // chance diagonal
    f << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"#999\" stroke-dasharray=\"5,4\"/>\n";
    // ticks
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
      f << "<line x1=\"" << px(t) << "\" y1=\"" << oy + svg::kPanelSize << "\" x2=\"" << px(t)
        << "\" y2=\"" << oy + svg::kPanelSize + 5 << "\" stroke=\"#333\"/>\n";
      f << "<text x=\"" << px(t) << "\" y=\"" << oy + svg::kPanelSize + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << svg::fmt(t) << "</text>\n";
      f << "<line x1=\"" << ox - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << ox << "\" y2=\"" << py(t)
        << "\" stroke=\"#333\"/>\n";
      f << "<text x=\"" << ox - 8 << "\" y=\"" << py(t) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << svg::fmt(t) << "</text>\n";
    }
    // axis labels and title
    f << "<text x=\"" << ox + svg::kPanelSize / 2 << "\" y=\"" << oy + svg::kPanelSize + 38
      << "\" font-size=\"13\" text-anchor=\"middle\">false positive rates</text>\n";
    f << "<text x=\"" << ox - 40 << "\" y=\"" << oy + svg::kPanelSize / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 " << ox - 40 << " "
      << oy + svg::kPanelSize / 2 << ")\">true positive rates</text>\n";
    f << "<text x=\"" << ox + svg::kPanelSize / 2 << "\" y=\"" << oy - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">" << panel.title << "</text>\n";

    for (size_t ci = 0; ci < panel.curves.size(); ++ci) {
      const auto& series = panel.curves[ci];
      f << "<polyline fill=\"none\" stroke=\"" << svg::series_color(ci)
        << "\" stroke-width=\"1.8\" points=\"";
      for (const auto& pt : series.points) f << px(pt.fpr) << "," << py(pt.tpr) << " ";
      f << "\"/>\n";
      // legend entry
      const double ly = oy + svg::kPanelSize - 14.0 - 16.0 * static_cast<double>(ci);
      f << "<line x1=\"" << px(0.52) << "\" y1=\"" << ly << "\" x2=\"" << px(0.60) << "\" y2=\"" << ly
        << "\" stroke=\"" << svg::series_color(ci) << "\" stroke-width=\"1.8\"/>\n";
      f << "<text x=\"" << px(0.62) << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << series.label
        << "</text>\n";
    }
  }
  f << "</svg>\n";
  if (!f) throw_data("plot_roc: write failed: " + out_path.string());
}

// ROC table I/O: tab-delimited with a fpr/tpr/threshold header.
inline void write_roc_table(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw_data("roc table: cannot open for write: " + path.string());
  f << "fpr\ttpr\tthreshold\n";
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.12g\t%.12g\t%.12g\n", p.fpr, p.tpr, p.threshold);
    f << buf;
  }
  if (!f) throw_data("roc table: write failed: " + path.string());
}

inline std::vector<RocPoint> read_roc_table(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw_data("roc table: file not found: " + path.string());
  std::string header;
  if (!std::getline(f, header)) throw_data("roc table: empty file: " + path.string());
  // Columns are located by name so extra columns stay harmless.
  std::vector<std::string> cols;
  {
    size_t start = 0;
    while (start <= header.size()) {
      const size_t tab = header.find('\t', start);
      cols.push_back(header.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
  }
  int fpr_col = -1, tpr_col = -1, thr_col = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "fpr") fpr_col = static_cast<int>(i);
    if (cols[i] == "tpr") tpr_col = static_cast<int>(i);
    if (cols[i] == "threshold") thr_col = static_cast<int>(i);
  }
  if (fpr_col < 0 || tpr_col < 0)
    throw_data("roc table: header must name fpr and tpr columns: " + path.string());

  std::vector<RocPoint> points;
  std::string line;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (start <= line.size()) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (static_cast<int>(fields.size()) <= std::max(fpr_col, tpr_col))
      throw_data("roc table: line " + std::to_string(line_no) + " is missing columns: " + path.string());
    try {
      RocPoint p{};
      p.fpr = std::stod(fields[static_cast<size_t>(fpr_col)]);
      p.tpr = std::stod(fields[static_cast<size_t>(tpr_col)]);
      p.threshold = (thr_col >= 0 && static_cast<int>(fields.size()) > thr_col)
                        ? std::stod(fields[static_cast<size_t>(thr_col)])
                        : 0.0;
      points.push_back(p);
    } catch (const std::exception&) {
      throw_data("roc table: line " + std::to_string(line_no) + " is not numeric: " + path.string());
    }
  }
  if (points.size() < 2) throw_data("roc table: fewer than 2 points: " + path.string());
  return points;
}

}  // namespace glio
