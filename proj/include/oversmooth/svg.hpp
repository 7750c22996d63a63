#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oversmooth/dynamics.hpp"

namespace oversmooth {

// Per-step summary of a trace set: mean and standard deviation of log mu
// over the traces that reach step t.
struct LogMuBand {
  std::vector<std::size_t> t;
  std::vector<double> mean;
  std::vector<double> std_dev;
};

// Throws kInvalidArgument for an empty set. Exact zeros of mu are clamped to
// the underflow floor.
LogMuBand log_mu_band(const std::vector<SimilarityTrace>& traces);

// Pixel mapping used by emit_svg: t on the x axis, log10 mu on the y axis.
struct PlotFrame {
  double width = 720.0;
  double height = 440.0;
  double left = 80.0, right = 20.0, top = 40.0, bottom = 50.0;
  double t_min = 0.0, t_max = 1.0;
  double y_min = -1.0, y_max = 0.0;  // log10 mu

  double x_px(double t) const;
  double y_px(double log10_mu) const;
  double t_at(double px) const;
  double log10_mu_at(double py) const;
};

PlotFrame plot_frame(const LogMuBand& band);

// Self-contained SVG 1.1: geometric-mean mu (polyline with id "mean") on a
// log axis and a +-1 std band (polygon with id "band").
std::string emit_svg(const std::vector<SimilarityTrace>& traces,
                     const std::string& title);

}  // namespace oversmooth
