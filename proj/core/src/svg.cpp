#include "anchorflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace af {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 16;
constexpr int kMarginBottom = 40;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Range {
  double lo = -1.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
  }
};

}  // namespace

std::string render_scatter_svg(const std::vector<ScatterBatch>& batches) {
  Range rx, ry;
  bool any = false;
  for (const auto& b : batches)
    for (const auto& p : b.points) {
      if (p.size() != 2)
        throw std::invalid_argument("render_scatter_svg: only 2-dimensional latents supported");
      if (!any) {
        rx = {p[0], p[0]};
        ry = {p[1], p[1]};
        any = true;
      } else {
        rx.expand(p[0]);
        ry.expand(p[1]);
      }
    }
  if (rx.hi - rx.lo < 1e-9) rx = {rx.lo - 1.0, rx.hi + 1.0};
  if (ry.hi - ry.lo < 1e-9) ry = {ry.lo - 1.0, ry.hi + 1.0};
  rx.pad();
  ry.pad();

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + (x - rx.lo) / (rx.hi - rx.lo) * plot_w; };
  auto sy = [&](double y) { return kMarginTop + (ry.hi - y) / (ry.hi - ry.lo) * plot_h; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
     << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

  // axes box
  os << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << fmt(plot_w)
     << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#222222\"/>\n";

  // ticks: 5 per axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
    const double px = sx(fx);
    os << "<line x1=\"" << fmt(px) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\"" << fmt(px)
       << "\" y2=\"" << fmt(kMarginTop + plot_h + 5) << "\" stroke=\"#222222\"/>\n";
    os << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kMarginTop + plot_h + 18)
       << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
       << fmt_tick(fx) << "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
    const double py = sy(fy);
    os << "<line x1=\"" << fmt(kMarginLeft - 5.0) << "\" y1=\"" << fmt(py) << "\" x2=\""
       << kMarginLeft << "\" y2=\"" << fmt(py) << "\" stroke=\"#222222\"/>\n";
    os << "<text x=\"" << fmt(kMarginLeft - 8.0) << "\" y=\"" << fmt(py + 4)
       << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt_tick(fy)
       << "</text>\n";
  }

  for (const auto& b : batches) {
    os << "<g>\n";
    for (const auto& p : b.points) {
      os << "<circle cx=\"" << fmt(sx(p[0])) << "\" cy=\"" << fmt(sy(p[1])) << "\" r=\"2.5\"";
      if (b.outlined)
        os << " fill=\"none\" stroke=\"" << b.color << "\" stroke-width=\"1\"";
      else
        os << " fill=\"" << b.color << "\"";
      os << "/>\n";
    }
    os << "</g>\n";
  }

  // legend, top-right inside the plot area
  double ly = kMarginTop + 14.0;
  for (const auto& b : batches) {
    const double lx = kWidth - kMarginRight - 130.0;
    os << "<circle cx=\"" << fmt(lx) << "\" cy=\"" << fmt(ly - 4.0) << "\" r=\"4\"";
    if (b.outlined)
      os << " fill=\"none\" stroke=\"" << b.color << "\"";
    else
      os << " fill=\"" << b.color << "\"";
    os << "/>\n<text x=\"" << fmt(lx + 10.0) << "\" y=\"" << fmt(ly)
       << "\" font-size=\"12\" font-family=\"sans-serif\">" << b.label << "</text>\n";
    ly += 16.0;
  }

  os << "</svg>\n";
  return os.str();
}

void render_scatter_svg(const std::vector<ScatterBatch>& batches, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("render_scatter_svg: cannot open " + path);
  os << render_scatter_svg(batches);
}

}  // namespace af
