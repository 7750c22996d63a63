#include "oversmooth/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "oversmooth/error.hpp"

namespace oversmooth {

namespace {

constexpr double kLn10 = 2.302585092994046;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

}  // namespace

LogMuBand log_mu_band(const std::vector<SimilarityTrace>& traces) {
  if (traces.empty()) throw Error(ErrorCode::kInvalidArgument, "no traces to plot");
  std::size_t len = 0;
  for (const auto& tr : traces) len = std::max(len, tr.records.size());
  const double floor = std::log(SimilarityTrace::kUnderflowFloor);
  LogMuBand band;
  for (std::size_t k = 0; k < len; ++k) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    std::size_t t = 0;
    for (const auto& tr : traces) {
      if (k >= tr.records.size()) continue;
      const auto& r = tr.records[k];
      const double lm = r.mu > 0.0 ? std::max(std::log(r.mu), floor) : floor;
      sum += lm;
      sum_sq += lm * lm;
      t = r.t;
      ++count;
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(sum_sq / static_cast<double>(count) - mean * mean, 0.0);
    band.t.push_back(t);
    band.mean.push_back(mean);
    band.std_dev.push_back(count > 1 ? std::sqrt(var) : 0.0);
  }
  return band;
}

double PlotFrame::x_px(double t) const {
  return left + (t - t_min) / (t_max - t_min) * (width - left - right);
}

double PlotFrame::y_px(double log10_mu) const {
  return top + (y_max - log10_mu) / (y_max - y_min) * (height - top - bottom);
}

double PlotFrame::t_at(double px) const {
  return t_min + (px - left) / (width - left - right) * (t_max - t_min);
}

double PlotFrame::log10_mu_at(double py) const {
  return y_max - (py - top) / (height - top - bottom) * (y_max - y_min);
}

PlotFrame plot_frame(const LogMuBand& band) {
  PlotFrame f;
  f.t_min = static_cast<double>(band.t.front());
  f.t_max = static_cast<double>(band.t.back());
  if (f.t_max <= f.t_min) f.t_max = f.t_min + 1.0;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < band.mean.size(); ++k) {
    lo = std::min(lo, (band.mean[k] - band.std_dev[k]) / kLn10);
    hi = std::max(hi, (band.mean[k] + band.std_dev[k]) / kLn10);
  }
  f.y_min = std::floor(lo);
  f.y_max = std::ceil(hi);
  if (f.y_max <= f.y_min) {
    f.y_min -= 1.0;
    f.y_max += 1.0;
  }
  return f;
}

std::string emit_svg(const std::vector<SimilarityTrace>& traces,
                     const std::string& title) {
  const LogMuBand band = log_mu_band(traces);
  const PlotFrame f = plot_frame(band);
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       fmt(f.width) + "\" height=\"" + fmt(f.height) + "\" viewBox=\"0 0 " +
       fmt(f.width) + " " + fmt(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(f.width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" + escape(title) + "</text>\n";

  const double x0 = f.left, x1 = f.width - f.right;
  const double y0 = f.top, y1 = f.height - f.bottom;
  s += "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  const double span = f.y_max - f.y_min;
  const double step = std::max(1.0, std::ceil(span / 8.0));
  for (double e = f.y_min; e <= f.y_max + 1e-9; e += step) {
    const double y = f.y_px(e);
    s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(x1) +
         "\" y2=\"" + fmt(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(y + 4) +
         "\" text-anchor=\"end\">1e" + std::to_string(static_cast<long>(e)) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double t = f.t_min + (f.t_max - f.t_min) * k / 5.0;
    const double x = f.x_px(t);
    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y1 + 16) +
         "\" text-anchor=\"middle\">" + std::to_string(std::lround(t)) + "</text>\n";
  }
  s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) +
       "\" height=\"" + fmt(y1 - y0) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(f.height - 10) +
       "\" text-anchor=\"middle\">layer t</text>\n";
  s += "<text x=\"16\" y=\"" + fmt((y0 + y1) / 2) + "\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 16 " + fmt((y0 + y1) / 2) + ")\">mu(x(t))</text>\n";
  s += "</g>\n";

  std::string upper, lower, mean;
  for (std::size_t k = 0; k < band.t.size(); ++k) {
    const double x = f.x_px(static_cast<double>(band.t[k]));
    upper += fmt(x) + "," + fmt(f.y_px((band.mean[k] + band.std_dev[k]) / kLn10)) + " ";
    mean += fmt(x) + "," + fmt(f.y_px(band.mean[k] / kLn10)) + " ";
  }
  for (std::size_t k = band.t.size(); k-- > 0;) {
    const double x = f.x_px(static_cast<double>(band.t[k]));
    lower += fmt(x) + "," + fmt(f.y_px((band.mean[k] - band.std_dev[k]) / kLn10)) + " ";
  }
  if (!mean.empty()) mean.pop_back();
  s += "<polygon id=\"band\" points=\"" + upper + lower.substr(0, lower.size() - 1) +
       "\" fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  s += "<polyline id=\"mean\" points=\"" + mean +
       "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace oversmooth
