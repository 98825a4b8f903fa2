#include "sddc/bd_rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sddc/error.hpp"

namespace sddc {

QualityMetric parse_quality_metric(const std::string& name) {
  if (name == "psnr") return QualityMetric::psnr;
  if (name == "msssim" || name == "ms-ssim" || name == "msssim_db") return QualityMetric::msssim_db;
  throw Error("unknown quality metric '" + name + "' (expected psnr or msssim)");
}

double msssim_to_db(double v) {
  if (v >= 1.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(1.0 - v);
}

double quality_of(const RDPoint& p, QualityMetric metric) {
  return metric == QualityMetric::psnr ? p.psnr : msssim_to_db(p.msssim);
}

namespace {

double pchip_end_slope(double h0, double h1, double m0, double m1) {
  double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
  if (d * m0 <= 0.0) return 0.0;
  if (m0 * m1 < 0.0 && std::abs(d) > std::abs(3.0 * m0)) return 3.0 * m0;
  return d;
}

}  // namespace

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error("interpolation needs at least two (x, y) pairs");
  for (size_t i = 0; i + 1 < n; ++i) {
    if (!(x_[i + 1] > x_[i])) throw Error("interpolation knots must be strictly increasing");
  }
  std::vector<double> h(n - 1), m(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    m[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = m[0];
    return;
  }
  for (size_t i = 1; i + 1 < n; ++i) {
    if (m[i - 1] * m[i] <= 0.0) continue;
    const double w1 = 2.0 * h[i] + h[i - 1];
    const double w2 = h[i] + 2.0 * h[i - 1];
    d_[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
  }
  d_[0] = pchip_end_slope(h[0], h[1], m[0], m[1]);
  d_[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
}

size_t Pchip::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  size_t k = it == x_.begin() ? 0 : static_cast<size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double Pchip::operator()(double x) const {
  const size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
         (t3 - t2) * h * d_[k + 1];
}

// Antiderivative of the Hermite basis in t, scaled by h.
double Pchip::segment_integral(size_t k, double a, double b) const {
  const double h = x_[k + 1] - x_[k];
  auto prim = [&](double x) {
    const double t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return h * ((0.5 * t4 - t3 + t) * y_[k] + (0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2) * h * d_[k] +
                (-0.5 * t4 + t3) * y_[k + 1] + (0.25 * t4 - t3 / 3.0) * h * d_[k + 1]);
  };
  return prim(b) - prim(a);
}

double Pchip::integrate(double a, double b) const {
  if (a > b) return -integrate(b, a);
  double total = 0.0;
  for (size_t k = 0; k + 1 < x_.size(); ++k) {
    const double lo = std::max(a, x_[k]);
    const double hi = std::min(b, x_[k + 1]);
    if (hi > lo) total += segment_integral(k, lo, hi);
  }
  return total;
}

namespace {

Pchip log_rate_curve(std::span<const RDPoint> pts, QualityMetric metric, const char* which) {
  if (pts.size() < 4) {
    throw Error(std::string("BD-rate needs at least 4 points per curve; ") + which + " has " +
                std::to_string(pts.size()));
  }
  std::vector<std::pair<double, double>> qr;
  for (const auto& p : pts) {
    const double q = quality_of(p, metric);
    if (!(p.bpp > 0.0) || !std::isfinite(q)) {
      throw Error(std::string("BD-rate: ") + which + " has a point with non-positive rate or non-finite quality");
    }
    qr.emplace_back(q, std::log(p.bpp));
  }
  std::sort(qr.begin(), qr.end());
  std::vector<double> x, y;
  for (const auto& [q, r] : qr) {
    x.push_back(q);
    y.push_back(r);
  }
  try {
    return Pchip(std::move(x), std::move(y));
  } catch (const Error&) {
    throw Error(std::string("BD-rate: ") + which + " curve has repeated quality values");
  }
}

}  // namespace

double bd_rate(std::span<const RDPoint> anchor, std::span<const RDPoint> test, QualityMetric metric) {
  const Pchip a = log_rate_curve(anchor, metric, "anchor");
  const Pchip t = log_rate_curve(test, metric, "test");
  const double lo = std::max(a.x_min(), t.x_min());
  const double hi = std::min(a.x_max(), t.x_max());
  if (!(hi > lo)) throw Error("BD-rate: the curves have no overlapping quality range");
  const double avg = (t.integrate(lo, hi) - a.integrate(lo, hi)) / (hi - lo);
  return (std::exp(avg) - 1.0) * 100.0;
}

}  // namespace sddc
