#include "pglab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pglab::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr double kLeft = 70, kRight = 170, kTop = 50, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void pad(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

std::ostringstream open(const std::string& title) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
     << escape(title) << "</text>\n";
  return os;
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xlabel, const std::string& ylabel,
          bool log_x = false) {
  const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
  os << "<rect x=\"" << num(l) << "\" y=\"" << num(t) << "\" width=\"" << num(r - l) << "\" height=\"" << num(b - t)
     << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(b + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << tick(log_x ? std::pow(10.0, xv) : xv) << "</text>\n";
    os << "<text x=\"" << num(l - 6) << "\" y=\"" << num(f.py(yv) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << tick(yv) << "</text>\n";
  }
  os << "<text x=\"" << num((l + r) / 2) << "\" y=\"" << num(b + 42)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << escape(xlabel) << "</text>\n";
  os << "<text x=\"18\" y=\"" << num((t + b) / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"14\" transform=\"rotate(-90 18 " << num((t + b) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    os << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << num(y) << "\" width=\"12\" height=\"12\" fill=\""
       << color(i) << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << num(y + 11)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[i].label) << "</text>\n";
  }
}

}  // namespace

std::string scatter(const std::string& title, const std::vector<Series>& series, const Series& markers) {
  double lo = 1e300, hi = -1e300;
  auto extend = [&](const std::vector<double>& v) {
    for (double a : v)
      if (std::isfinite(a)) lo = std::min(lo, a), hi = std::max(hi, a);
  };
  for (const Series& s : series) extend(s.x), extend(s.y);
  extend(markers.x);
  extend(markers.y);
  pad(lo, hi);
  const Frame f{lo, hi, lo, hi};
  std::ostringstream os = open(title);
  axes(os, f, "x1", "x2");
  for (std::size_t i = 0; i < series.size(); ++i)
    for (std::size_t k = 0; k < series[i].x.size() && k < series[i].y.size(); ++k)
      os << "<circle cx=\"" << num(f.px(series[i].x[k])) << "\" cy=\"" << num(f.py(series[i].y[k]))
         << "\" r=\"3\" fill=\"" << color(i) << "\" fill-opacity=\"0.7\"/>\n";
  for (std::size_t k = 0; k < markers.x.size() && k < markers.y.size(); ++k) {
    const double cx = f.px(markers.x[k]), cy = f.py(markers.y[k]);
    os << "<path d=\"M" << num(cx - 5) << ' ' << num(cy - 5) << "L" << num(cx + 5) << ' ' << num(cy + 5) << "M"
       << num(cx - 5) << ' ' << num(cy + 5) << "L" << num(cx + 5) << ' ' << num(cy - 5)
       << "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

std::string histogram(const std::string& title, const std::string& xlabel, const std::vector<double>& counts,
                      int first_bin) {
  double top = 0.0;
  for (double c : counts) top = std::max(top, c);
  if (top <= 0.0) top = 1.0;
  const double nb = static_cast<double>(std::max<std::size_t>(counts.size(), 1));
  const Frame f{first_bin - 0.5, first_bin - 0.5 + nb, 0.0, top * 1.05};
  std::ostringstream os = open(title);
  axes(os, f, xlabel, "count");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double x = first_bin + static_cast<double>(k);
    const double left = f.px(x - 0.4), right = f.px(x + 0.4);
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(f.py(counts[k])) << "\" width=\"" << num(right - left)
       << "\" height=\"" << num(f.py(0.0) - f.py(counts[k])) << "\" fill=\"" << color(0) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool log_x) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const Series& s : series) {
    for (double x : s.x) x0 = std::min(x0, tx(x)), x1 = std::max(x1, tx(x));
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  pad(x0, x1);
  pad(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream os = open(title);
  axes(os, f, xlabel, ylabel, log_x);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    os << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
      os << (k ? " " : "") << num(f.px(tx(s.x[k]))) << ',' << num(f.py(s.y[k]));
    os << "\"/>\n";
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
      os << "<circle cx=\"" << num(f.px(tx(s.x[k]))) << "\" cy=\"" << num(f.py(s.y[k])) << "\" r=\"4\" fill=\""
         << color(i) << "\"/>\n";
  }
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(const std::string& title, const std::vector<double>& values, int g, double lo, double step) {
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  const double hi = lo + (g - 1) * step;
  const Frame f{lo - step / 2, hi + step / 2, lo - step / 2, hi + step / 2};
  std::ostringstream os = open(title);
  axes(os, f, "x1", "x2");
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) {
      const double v = std::clamp(values[static_cast<std::size_t>(a * g + b)] / top, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      const double x = lo + a * step, y = lo + b * step;
      const double l = f.px(x - step / 2), r = f.px(x + step / 2), t = f.py(y + step / 2), bt = f.py(y - step / 2);
      os << "<rect x=\"" << num(l) << "\" y=\"" << num(t) << "\" width=\"" << num(r - l) << "\" height=\""
         << num(bt - t) << "\" fill=\"" << fill << "\"/>\n";
    }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pglab::svg
