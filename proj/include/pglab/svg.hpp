#pragma once

#include <string>
#include <vector>

namespace pglab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

inline constexpr int kWidth = 800;
inline constexpr int kHeight = 600;

/// One colour per series; `markers` are drawn as crosses.
std::string scatter(const std::string& title, const std::vector<Series>& series, const Series& markers);
std::string histogram(const std::string& title, const std::string& xlabel, const std::vector<double>& counts,
                      int first_bin);
std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool log_x);
/// Row-major g x g values on the square [lo, lo + (g-1) step]^2.
std::string heatmap(const std::string& title, const std::vector<double>& values, int g, double lo, double step);

}  // namespace pglab::svg
