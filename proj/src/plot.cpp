#include "octskin/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "octskin/data_io.hpp"

namespace octskin {

namespace {

const cv::Scalar kPalette[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}, {189, 103, 148}};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void write_line_plot(const std::vector<PlotSeries>& series, const PlotStyle& style,
                     const std::filesystem::path& path) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ParameterError("plot: x and y lengths differ in " + s.label);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) throw ParameterError("plot: no data points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  cv::Mat img(style.height_px, style.width_px, CV_8UC3, cv::Scalar(255, 255, 255));
  const int left = 80, right = 30, top = 50, bottom = 60;
  const int pw = style.width_px - left - right, ph = style.height_px - top - bottom;
  auto to_px = [&](double x, double y) {
    return cv::Point(left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * pw)),
                     top + ph - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * ph)));
  };
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  const cv::Scalar ink(40, 40, 40), grid(225, 225, 225);
  for (int t = 0; t <= 5; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 5.0, xv = xmin + (xmax - xmin) * t / 5.0;
    const cv::Point py = to_px(xmin, yv), px = to_px(xv, ymin);
    cv::line(img, py, {left + pw, py.y}, grid, 1);
    cv::line(img, px, {px.x, top}, grid, 1);
    cv::putText(img, tick_label(yv), {8, py.y + 4}, font, 0.4, ink, 1, cv::LINE_AA);
    cv::putText(img, tick_label(xv), {px.x - 12, top + ph + 18}, font, 0.4, ink, 1, cv::LINE_AA);
  }
  cv::rectangle(img, {left, top}, {left + pw, top + ph}, ink, 1);
  cv::putText(img, style.title, {left, 30}, font, 0.6, ink, 1, cv::LINE_AA);
  cv::putText(img, style.x_label, {left + pw / 2 - 30, style.height_px - 15}, font, 0.5, ink, 1, cv::LINE_AA);
  cv::putText(img, style.y_label, {8, top - 12}, font, 0.45, ink, 1, cv::LINE_AA);

  int legend_w = 0;
  for (const auto& s : series) {
    int baseline = 0;
    legend_w = std::max(legend_w, cv::getTextSize(s.label, font, 0.45, 1, &baseline).width);
  }
  const int legend_x = left + pw - legend_w - 45;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const cv::Scalar color = kPalette[k % std::size(kPalette)];
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
      cv::line(img, to_px(s.x[i], s.y[i]), to_px(s.x[i + 1], s.y[i + 1]), color, 2, cv::LINE_AA);
    if (style.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i) cv::circle(img, to_px(s.x[i], s.y[i]), 4, color, -1, cv::LINE_AA);
    const int ly = top + 18 + 18 * static_cast<int>(k);
    cv::line(img, {legend_x, ly - 4}, {legend_x + 25, ly - 4}, color, 2);
    cv::putText(img, s.label, {legend_x + 32, ly}, font, 0.45, ink, 1, cv::LINE_AA);
  }

  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", img, buf)) throw IoError("plot: cannot encode PNG");
  write_file_atomic(path, buf);
}

}  // namespace octskin
