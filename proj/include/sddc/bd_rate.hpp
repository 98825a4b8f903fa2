#pragma once

#include <span>
#include <string>
#include <vector>

namespace sddc {

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;    // dB
  double msssim = 1.0;  // linear, in (0, 1]
};

enum class QualityMetric { psnr, msssim_db };

QualityMetric parse_quality_metric(const std::string& name);

/// -10 log10(1 - v); +inf for v == 1.
double msssim_to_db(double v);

double quality_of(const RDPoint& p, QualityMetric metric);

/// Shape-preserving monotone cubic Hermite interpolant (Fritsch-Carlson
/// slopes) through points with strictly increasing x.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  /// Exact integral of the interpolant over [a, b] (a <= b, inside the knots).
  double integrate(double a, double b) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  size_t segment(double x) const;
  double segment_integral(size_t k, double a, double b) const;

  std::vector<double> x_, y_, d_;
};

/// Average bitrate difference (percent) of `test` relative to `anchor` at
/// equal quality. Negative means the test curve needs fewer bits.
double bd_rate(std::span<const RDPoint> anchor, std::span<const RDPoint> test,
               QualityMetric metric = QualityMetric::psnr);

}  // namespace sddc
