#include "ptpb/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ptpb/exceptions.hpp"

namespace ptpb {

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Panel {
  double x0, y0, w, h;      // pixel box
  double tmin, tmax;        // data ranges
  double ymin, ymax;

  double px(double t) const { return x0 + (t - tmin) / (tmax - tmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void draw_frame(std::ofstream& out, const Panel& p, const std::string& y_label) {
  out << "<rect x=\"" << fmt2(p.x0) << "\" y=\"" << fmt2(p.y0) << "\" width=\"" << fmt2(p.w)
      << "\" height=\"" << fmt2(p.h) << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = p.tmin + (p.tmax - p.tmin) * k / 4.0;
    const double x = p.px(t);
    out << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(p.y0 + p.h) << "\" x2=\"" << fmt2(x)
        << "\" y2=\"" << fmt2(p.y0 + p.h + 4) << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(p.y0 + p.h + 16)
        << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333\">" << fmt_label(t)
        << "</text>\n";
  }
  for (int k = 0; k <= 3; ++k) {
    const double y = p.ymin + (p.ymax - p.ymin) * k / 3.0;
    const double yp = p.py(y);
    out << "<line x1=\"" << fmt2(p.x0 - 4) << "\" y1=\"" << fmt2(yp) << "\" x2=\"" << fmt2(p.x0)
        << "\" y2=\"" << fmt2(yp) << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << fmt2(p.x0 - 7) << "\" y=\"" << fmt2(yp + 3)
        << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#333\">" << fmt_label(y)
        << "</text>\n";
  }
  out << "<text x=\"" << fmt2(p.x0 - 48) << "\" y=\"" << fmt2(p.y0 + p.h / 2)
      << "\" font-size=\"11\" fill=\"#333\" text-anchor=\"middle\" transform=\"rotate(-90 "
      << fmt2(p.x0 - 48) << ' ' << fmt2(p.y0 + p.h / 2) << ")\">" << y_label << "</text>\n";
}

void draw_polyline(std::ofstream& out, const Panel& p, const std::vector<double>& t,
                   const std::vector<double>& y, const std::string& color, bool dashed) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\"";
  if (dashed) out << " stroke-dasharray=\"5,4\"";
  out << " points=\"";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << fmt2(p.px(t[i])) << ',' << fmt2(p.py(std::clamp(y[i], p.ymin, p.ymax)));
    if (i + 1 < t.size()) out << ' ';
  }
  out << "\"/>\n";
}

void draw_marker(std::ofstream& out, const Panel& p, double t_mark) {
  if (t_mark < p.tmin || t_mark > p.tmax) return;
  const double x = p.px(t_mark);
  out << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(p.y0) << "\" x2=\"" << fmt2(x)
      << "\" y2=\"" << fmt2(p.y0 + p.h)
      << "\" stroke=\"#c02020\" stroke-width=\"1\" stroke-dasharray=\"3,3\"/>\n";
}

}  // namespace

void write_tracking_svg(const std::string& path, const SimResult& result, const Reference& ref,
                        double t0, double T) {
  if (result.rows() < 2) throw InvalidArgumentError("tracking svg: need at least two samples");
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);

  const Eigen::Index n = result.dof();
  const Eigen::Index rows = result.rows();
  const Eigen::Index stride = std::max<Eigen::Index>(1, rows / 1500);

  std::vector<double> ts;
  for (Eigen::Index r = 0; r < rows; r += stride) ts.push_back(result.t[static_cast<std::size_t>(r)]);
  if ((rows - 1) % stride != 0) ts.push_back(result.t[static_cast<std::size_t>(rows - 1)]);

  const auto sampled = [&](auto&& getter) {
    std::vector<double> y;
    y.reserve(ts.size());
    for (Eigen::Index r = 0; r < rows; r += stride) y.push_back(getter(r));
    if ((rows - 1) % stride != 0) y.push_back(getter(rows - 1));
    return y;
  };

  const double margin_left = 64.0;
  const double margin_right = 16.0;
  const double panel_h = 170.0;
  const double panel_gap = 42.0;
  const double width = 880.0;
  const double panel_w = width - margin_left - margin_right;
  const auto panels = static_cast<int>(n) + 1;
  const double height = 24.0 + panels * (panel_h + panel_gap);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const double tmin = ts.front();
  const double tmax = ts.back();

  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<double> qj = sampled([&](Eigen::Index r) { return result.q(r, j); });
    std::vector<double> qr;
    qr.reserve(ts.size());
    for (double t : ts) qr.push_back(ref.q(t)[j]);

    double lo = qj.front(), hi = qj.front();
    for (double v : qj) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : qr) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const double pad = std::max(1e-6, 0.08 * (hi - lo));
    Panel p{margin_left, 24.0 + static_cast<double>(j) * (panel_h + panel_gap), panel_w, panel_h,
            tmin, tmax, lo - pad, hi + pad};

    draw_frame(out, p, "q_" + std::to_string(j + 1) + " [rad]");
    draw_polyline(out, p, ts, qr, "#888888", true);
    draw_polyline(out, p, ts, qj, "#1f5fbf", false);
    draw_marker(out, p, t0 + T);
    out << "<text x=\"" << fmt2(p.x0 + 6) << "\" y=\"" << fmt2(p.y0 - 6)
        << "\" font-size=\"11\" fill=\"#333\">joint " << (j + 1)
        << ": measured (solid) vs reference (dashed)</text>\n";
  }

  std::vector<double> log_err = sampled([&](Eigen::Index r) {
    return std::log10(std::max(result.e.row(r).norm(), 1e-12));
  });
  double lo = log_err.front(), hi = log_err.front();
  for (double v : log_err) { lo = std::min(lo, v); hi = std::max(hi, v); }
  const double pad = std::max(0.2, 0.08 * (hi - lo));
  Panel p{margin_left, 24.0 + static_cast<double>(n) * (panel_h + panel_gap), panel_w, panel_h,
          tmin, tmax, lo - pad, hi + pad};
  draw_frame(out, p, "log10 ||e|| [rad]");
  draw_polyline(out, p, ts, log_err, "#208040", false);
  draw_marker(out, p, t0 + T);
  out << "<text x=\"" << fmt2(p.x0 + 6) << "\" y=\"" << fmt2(p.y0 - 6)
      << "\" font-size=\"11\" fill=\"#333\">tracking error norm (settling window ends at the "
         "dashed marker)</text>\n";

  out << "<text x=\"" << fmt2(margin_left + panel_w / 2) << "\" y=\"" << fmt2(height - 8)
      << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">t [s]</text>\n";
  out << "</svg>\n";
}

}  // namespace ptpb
