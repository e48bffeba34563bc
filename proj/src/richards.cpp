// Sample-statistic baseline measures. Percentiles interpolate linearly between
// order statistics; any 0/0 ratio evaluates to 0.

#include <algorithm>
#include <cmath>
#include <vector>

#include "lcmodel/features.hpp"
#include "lcmodel/stats.hpp"

namespace lcmodel::features {

namespace {

constexpr double kMinTimeStep = 1e-6;
constexpr std::size_t kPairSlopeWindow = 30;
constexpr double kRcorborMagnitudes = 1.5;
constexpr double kMedbufFraction = 0.1;

double ratio(double num, double den) {
  if (num == 0.0 && den == 0.0) return 0.0;
  return num / den;
}

double flux_percentile_ratio(std::span<const double> sorted, double k) {
  const double inner = stats::percentile_sorted(sorted, 50.0 + k / 2.0) - stats::percentile_sorted(sorted, 50.0 - k / 2.0);
  const double outer = stats::percentile_sorted(sorted, 97.5) - stats::percentile_sorted(sorted, 2.5);
  return ratio(inner, outer);
}

}  // namespace

RichardsMeasures richards_measures(const Lightcurve& lc) {
  const auto data = detected(lc);
  const auto& y = data.y;
  const auto& t = data.t;
  const auto n = y.size();
  RichardsMeasures r;
  if (n == 0) return r;
  const auto count = static_cast<double>(n);

  const double mean = stats::mean(y);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (const auto v : y) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= count;
  m3 /= count;
  m4 /= count;
  r.std = n > 1 ? std::sqrt(m2 * count / (count - 1.0)) : 0.0;
  r.skew = ratio(m3, std::pow(m2, 1.5));
  r.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  r.beyond1std = static_cast<double>(std::count_if(y.begin(), y.end(), [&](double v) { return std::abs(v - mean) > r.std; })) / count;

  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double median = stats::percentile_sorted(sorted, 50.0);
  const double range = sorted.back() - sorted.front();
  r.amplitude = range / 2.0;

  std::vector<double> abs_dev(n);
  for (std::size_t i = 0; i < n; ++i) abs_dev[i] = std::abs(y[i] - median);
  r.mad = stats::median(abs_dev);
  r.medbuf = static_cast<double>(std::count_if(abs_dev.begin(), abs_dev.end(),
                                               [&](double d) { return d <= kMedbufFraction * r.amplitude; })) /
             count;
  r.rcorbor = static_cast<double>(std::count_if(y.begin(), y.end(), [&](double v) { return v > median + kRcorborMagnitudes; })) /
              count;

  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double dt = std::max(t[j + 1] - t[j], kMinTimeStep);
    r.maxslope = std::max(r.maxslope, std::abs(y[j + 1] - y[j]) / dt);
  }
  if (n > 1) {
    const std::size_t pairs = std::min(kPairSlopeWindow, n - 1);
    std::size_t rising = 0;
    for (std::size_t j = n - 1 - pairs; j + 1 < n; ++j) {
      if (y[j + 1] - y[j] > 0.0) ++rising;
    }
    r.pairslope = static_cast<double>(rising) / static_cast<double>(pairs);
  }

  r.fpr20 = flux_percentile_ratio(sorted, 20.0);
  r.fpr35 = flux_percentile_ratio(sorted, 35.0);
  r.fpr50 = flux_percentile_ratio(sorted, 50.0);
  r.fpr80 = flux_percentile_ratio(sorted, 80.0);
  r.peramp = ratio(range, median);
  r.pdfp = ratio(stats::percentile_sorted(sorted, 95.0) - stats::percentile_sorted(sorted, 5.0), median);
  return r;
}

NamedValues richards_named(const RichardsMeasures& r) {
  return {
      {"skew", r.skew},       {"kurtosis", r.kurtosis},   {"std", r.std},       {"beyond1std", r.beyond1std},
      {"amplitude", r.amplitude}, {"maxslope", r.maxslope}, {"mad", r.mad},     {"medbuf", r.medbuf},
      {"pairslope", r.pairslope}, {"rcorbor", r.rcorbor}, {"fpr20", r.fpr20},   {"fpr35", r.fpr35},
      {"fpr50", r.fpr50},     {"fpr80", r.fpr80},         {"peramp", r.peramp}, {"pdfp", r.pdfp},
  };
}

}  // namespace lcmodel::features
