#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace emass {

/// Columns of plot data; NaN cells are written as NA.
struct PlotTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(std::string_view name) const;
};

/// Figure ids accepted by make_figure.
const std::vector<std::string>& figure_ids();

/// Series reproducing a figure's generating process:
///   fig1a  AR(1) sampled every step, every 5th and every 10th step, with
///          the linearly interpolated thinned series;
///   fig1b  linear-trend and weekend-trend series sharing every innovation;
///   fig3a  AR(1) whose coefficient rises along a sigmoid from 0 to 1;
///   fig3b  AR(1) around a mean of 0, 3 and -3 split at t = 33 and 66;
///   fig3c  stationary and random-walk series sharing every innovation with
///          a step shock arriving at t = 50.
PlotTable make_figure(std::string_view figure, std::uint64_t seed);

/// Shock added at t = 50 in fig3c.
inline constexpr double kFig3cShock = 10.0;

void write_plot_table(const PlotTable& table, std::ostream& out);

}  // namespace emass
