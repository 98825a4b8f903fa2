#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sddc/bd_rate.hpp"

namespace sddc::test {

// Bits of one symbol under a discretized Laplace, from the closed-form CDF
// in long double.
inline long double oracle_bits(long double q, long double mu, long double b) {
  auto cdf = [&](long double x) {
    const long double t = (x - mu) / b;
    return t < 0 ? 0.5L * std::exp(t) : 1.0L - 0.5L * std::exp(-t);
  };
  long double p = cdf(q + 0.5L) - cdf(q - 0.5L);
  if (p < 1.0L / 65536.0L) p = 1.0L / 65536.0L;
  return -std::log2(p);
}

// Seeded Laplace-distributed integers with per-element parameters.
struct LaplaceGrid {
  torch::Tensor q, mu, scale;
};

inline LaplaceGrid laplace_grid(int64_t n, uint64_t seed, double max_scale = 8.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LaplaceGrid g{torch::empty({n}), torch::empty({n}), torch::empty({n})};
  auto q = g.q.accessor<float, 1>();
  auto m = g.mu.accessor<float, 1>();
  auto s = g.scale.accessor<float, 1>();
  for (int64_t i = 0; i < n; ++i) {
    const double mu = (u(rng) - 0.5) * 20.0;
    const double b = 0.01 + u(rng) * max_scale;
    const double v = u(rng) - 0.5;
    const double x = mu - b * (v < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(v));
    q[i] = static_cast<float>(std::nearbyint(x));
    m[i] = static_cast<float>(mu);
    s[i] = static_cast<float>(b);
  }
  return g;
}


// Reference monotone cubic: Fritsch-Carlson harmonic-mean interior slopes,
// three-point one-sided end slopes limited for shape preservation.
struct RefPchip {
  std::vector<double> x, y, d;

  RefPchip(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)), d(x.size()) {
    const size_t n = x.size();
    auto delta = [&](size_t i) { return (y[i + 1] - y[i]) / (x[i + 1] - x[i]); };
    auto hh = [&](size_t i) { return x[i + 1] - x[i]; };
    for (size_t i = 1; i + 1 < n; ++i) {
      const double a = delta(i - 1), b = delta(i);
      if (a == 0 || b == 0 || (a > 0) != (b > 0)) {
        d[i] = 0;
      } else {
        const double w1 = 2 * hh(i) + hh(i - 1), w2 = hh(i) + 2 * hh(i - 1);
        d[i] = (w1 + w2) / (w1 / a + w2 / b);
      }
    }
    auto end = [&](double h0, double h1, double m0, double m1) {
      double s = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
      if ((s > 0) != (m0 > 0) || s == 0) return 0.0;
      if ((m0 > 0) != (m1 > 0) && std::fabs(s) > 3 * std::fabs(m0)) return 3 * m0;
      return s;
    };
    d[0] = end(hh(0), hh(1), delta(0), delta(1));
    d[n - 1] = end(hh(n - 2), hh(n - 3), delta(n - 2), delta(n - 3));
  }

  double operator()(double v) const {
    size_t k = 0;
    while (k + 2 < x.size() && v > x[k + 1]) ++k;
    const double h = x[k + 1] - x[k], s = v - x[k];
    const double c2 = (3 * (y[k + 1] - y[k]) / h - 2 * d[k] - d[k + 1]) / h;
    const double c3 = (d[k] + d[k + 1] - 2 * (y[k + 1] - y[k]) / h) / (h * h);
    return y[k] + d[k] * s + c2 * s * s + c3 * s * s * s;
  }
};

// Dense midpoint integration over the shared quality range.
inline double dense_bd_rate(const std::vector<RDPoint>& anchor, const std::vector<RDPoint>& test) {
  auto build = [](const std::vector<RDPoint>& pts) {
    std::vector<RDPoint> p = pts;
    std::sort(p.begin(), p.end(), [](const RDPoint& a, const RDPoint& b) { return a.psnr < b.psnr; });
    std::vector<double> q, r;
    for (const auto& e : p) {
      q.push_back(e.psnr);
      r.push_back(std::log(e.bpp));
    }
    return RefPchip(q, r);
  };
  const auto fa = build(anchor), ft = build(test);
  const double lo = std::max(fa.x.front(), ft.x.front());
  const double hi = std::min(fa.x.back(), ft.x.back());
  const int n = 400000;
  const double step = (hi - lo) / n;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double q = lo + (i + 0.5) * step;
    sum += ft(q) - fa(q);
  }
  return (std::exp(sum * step / (hi - lo)) - 1.0) * 100.0;
}

}  // namespace sddc::test
