#pragma once

// Vector-graphics renderings of the emitted CSV tables. The renderers parse
// the CSV text rather than reusing in-memory state, so the CSV stays the
// single source of truth.

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace convlab {

namespace detail {

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

/// Heat map of the window-sup sweep: one cell per (delta, factor), grey level
/// by sup value, red outline on failing cells.
inline std::string lemma_frontier_svg(const std::string& csv_text) {
  auto rows = detail::parse_csv(csv_text);
  std::vector<double> deltas, factors;
  struct Cell { double delta, factor, sup; bool pass; };
  std::vector<Cell> cells;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 5) continue;
    Cell c{std::stod(rows[i][0]), std::stod(rows[i][1]), std::stod(rows[i][3]),
           rows[i][4] == "1"};
    cells.push_back(c);
    deltas.push_back(c.delta);
    factors.push_back(c.factor);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(deltas);
  uniq(factors);
  const double cw = 48, ch = 32, mx = 70, my = 40;
  const double width = mx + cw * static_cast<double>(deltas.size()) + 20;
  const double height = my + ch * static_cast<double>(factors.size()) + 30;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg << "<text x=\"" << mx << "\" y=\"18\">window sup by (delta, lambda/delta^2);"
      << " red = above 5/8</text>\n";
  auto find_index = [](const std::vector<double>& v, double x) {
    return static_cast<std::size_t>(
        std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  for (const auto& c : cells) {
    const double x = mx + cw * static_cast<double>(find_index(deltas, c.delta));
    const double y = my + ch * static_cast<double>(find_index(factors, c.factor));
    const int grey = static_cast<int>(245.0 - 195.0 * std::min(1.0, c.sup));
    svg << "<rect x=\"" << detail::svg_num(x) << "\" y=\"" << detail::svg_num(y)
        << "\" width=\"" << cw - 2 << "\" height=\"" << ch - 2
        << "\" fill=\"rgb(" << grey << ',' << grey << ',' << grey << ")\""
        << (c.pass ? " stroke=\"#888\"" : " stroke=\"#c00\" stroke-width=\"2\"")
        << "/>\n";
    svg << "<text x=\"" << detail::svg_num(x + 4) << "\" y=\""
        << detail::svg_num(y + ch / 2 + 3) << "\" fill=\""
        << (c.sup > 0.55 ? "#fff" : "#000") << "\">" << detail::svg_num(c.sup)
        << "</text>\n";
  }
  for (std::size_t i = 0; i < deltas.size(); ++i)
    svg << "<text x=\"" << detail::svg_num(mx + cw * static_cast<double>(i) + 4)
        << "\" y=\"" << detail::svg_num(my - 6) << "\">d="
        << detail::svg_num(deltas[i]) << "</text>\n";
  for (std::size_t i = 0; i < factors.size(); ++i)
    svg << "<text x=\"4\" y=\""
        << detail::svg_num(my + ch * static_cast<double>(i) + ch / 2 + 3)
        << "\">f=" << detail::svg_num(factors[i]) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

/// Line chart of bound ratios against j, one polyline per (preset, metric).
inline std::string bound_sweep_svg(const std::string& csv_text) {
  auto rows = detail::parse_csv(csv_text);
  struct Point { int j; double ratio; };
  std::map<std::string, std::vector<Point>> series;
  double max_ratio = 0.0;
  int jmin = 1 << 30, jmax = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 11) continue;
    const std::string metric = rows[i][5];
    if (metric == "tv") continue;
    const int j = std::stoi(rows[i][1]);
    const double ratio = std::stod(rows[i][10]);
    series[rows[i][0] + ":" + metric].push_back({j, ratio});
    max_ratio = std::max(max_ratio, ratio);
    jmin = std::min(jmin, j);
    jmax = std::max(jmax, j);
  }
  const double W = 480, H = 300, mx = 50, my = 30;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg << "<text x=\"" << mx << "\" y=\"16\">distance / (p_j + tau_j log* tau_j^-1) by j</text>\n";
  if (max_ratio <= 0.0) max_ratio = 1.0;
  auto sx = [&](int j) {
    return jmax == jmin ? mx : mx + (W - mx - 20) * (j - jmin) / static_cast<double>(jmax - jmin);
  };
  auto sy = [&](double r) { return H - 30 - (H - my - 60) * (r / max_ratio); };
  svg << "<line x1=\"" << mx << "\" y1=\"" << H - 30 << "\" x2=\"" << W - 20
      << "\" y2=\"" << H - 30 << "\" stroke=\"#000\"/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int ci = 0;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end(),
              [](const Point& a, const Point& b) { return a.j < b.j; });
    svg << "<polyline fill=\"none\" stroke=\"" << colors[ci % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts)
      svg << detail::svg_num(sx(p.j)) << ',' << detail::svg_num(sy(p.ratio)) << ' ';
    svg << "\"/>\n";
    svg << "<text x=\"" << W - 170 << "\" y=\"" << 34 + 14 * ci << "\" fill=\""
        << colors[ci % 4] << "\">" << name << "</text>\n";
    ++ci;
  }
  for (int j = jmin; j <= jmax; ++j)
    svg << "<text x=\"" << detail::svg_num(sx(j) - 4) << "\" y=\"" << H - 14
        << "\">" << j << "</text>\n";
  svg << "<text x=\"4\" y=\"" << detail::svg_num(sy(max_ratio) + 4) << "\">"
      << detail::svg_num(max_ratio) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace convlab
