#include "edgealloc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edgealloc/report.hpp"

namespace edgealloc {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const LineChart& chart, int width, int height) {
  const double left = 64, right = 150, top = 36, bottom = 48;
  const double pw = width - left - right, ph = height - top - bottom;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (!std::isfinite(y1) || y1 <= y0) y1 = y0 + 1.0;
  y1 *= 1.05;
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(chart.title) << "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = x0 + (x1 - x0) * k / 5.0, fy = y0 + (y1 - y0) * k / 5.0;
    os << "<line x1=\"" << fixed(sx(fx)) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(sx(fx))
       << "\" y2=\"" << fixed(top + ph) << "\" stroke=\"#eee\"/>\n";
    os << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(sy(fy)) << "\" x2=\"" << fixed(left + pw)
       << "\" y2=\"" << fixed(sy(fy)) << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << fixed(sx(fx)) << "\" y=\"" << fixed(top + ph + 16)
       << "\" text-anchor=\"middle\">" << format_number(std::round(fx * 100) / 100) << "</text>\n";
    os << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(sy(fy) + 4)
       << "\" text-anchor=\"end\">" << format_number(std::round(fy * 10) / 10) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
     << escape(chart.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (s.dashed) os << " stroke-dasharray=\"5,3\"";
    os << " points=\"";
    for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
      os << (j ? " " : "") << fixed(sx(s.x[j])) << ',' << fixed(sy(s.y[j]));
    }
    os << "\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << fixed(left + pw + 10) << "\" y1=\"" << fixed(ly) << "\" x2=\""
       << fixed(left + pw + 30) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\"";
    if (s.dashed) os << " stroke-dasharray=\"5,3\"";
    os << "/>\n<text x=\"" << fixed(left + pw + 34) << "\" y=\"" << fixed(ly + 4) << "\">"
       << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::pair<std::string, LineChart>> trace_charts(const PolicyTrace& trace,
                                                            const NetworkSpec& base) {
  std::vector<std::pair<std::string, LineChart>> out;
  const bool degradation = trace.kind == "degradation";
  const std::string x_label = degradation ? "degradation" : "per-node QoS minimum r";
  std::vector<double> xs;
  for (const auto& s : trace.steps) xs.push_back(s.param);

  for (std::size_t t = 0; t < base.task_count(); ++t) {
    LineChart c;
    c.title = "Runs of " + base.tasks[t].name + " per node";
    c.x_label = x_label;
    c.y_label = "runs per cycle";
    for (std::size_t i = 0; i < base.node_count(); ++i) {
      Series s{"node " + std::to_string(base.nodes[i].id), xs, {}, false};
      for (const auto& st : trace.steps) s.y.push_back(st.dynamic_x(i, t));
      c.series.push_back(std::move(s));
    }
    out.emplace_back(trace.kind + "_runs_" + base.tasks[t].name, std::move(c));
  }

  LineChart g;
  g.title = degradation ? "Achieved group QoS, dynamic vs static" : "Achieved group QoS";
  g.x_label = x_label;
  g.y_label = "runs per cycle";
  for (std::size_t m = 0; m < base.group_count(); ++m) {
    Series dyn{base.groups[m].name + " dynamic", xs, {}, false};
    for (const auto& st : trace.steps) dyn.y.push_back(st.dynamic_eval.group_qos[m]);
    g.series.push_back(std::move(dyn));
    if (degradation) {
      Series st{base.groups[m].name + " static", xs, {}, true};
      for (const auto& s : trace.steps) st.y.push_back(s.static_eval ? s.static_eval->group_qos[m] : 0.0);
      g.series.push_back(std::move(st));
    }
  }
  out.emplace_back(trace.kind + "_group_qos", std::move(g));
  return out;
}

}  // namespace edgealloc
