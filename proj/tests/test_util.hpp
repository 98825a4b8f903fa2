#pragma once

#include <torch/torch.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sddc/frames_io.hpp"

namespace sddc::test {

inline std::filesystem::path data_dir() { return SDDC_TEST_DATA_DIR; }

inline torch::Tensor rand_image(int64_t h, int64_t w, uint64_t seed, int64_t c = 3) {
  auto g = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::rand({c, h, w}, g);
}

inline double max_abs(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

inline bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.dtype() == b.dtype() && torch::equal(a, b);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sddc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Scalar reference for 1-D linear resampling with half-pixel centers,
// negative source coordinates clamped to zero.
inline double resample_1d(const std::vector<double>& src, size_t out_len, size_t i) {
  const double scale = static_cast<double>(src.size()) / static_cast<double>(out_len);
  double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
  if (s < 0) s = 0;
  auto i0 = static_cast<size_t>(std::floor(s));
  if (i0 > src.size() - 1) i0 = src.size() - 1;
  const size_t i1 = std::min(i0 + 1, src.size() - 1);
  const double t = s - static_cast<double>(i0);
  return (1 - t) * src[i0] + t * src[i1];
}

// Scalar bilinear resize of a [H, W] float64 image.
inline std::vector<std::vector<double>> resize_oracle(const std::vector<std::vector<double>>& img, size_t oh,
                                                      size_t ow) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : img) {
    std::vector<double> out(ow);
    for (size_t x = 0; x < ow; ++x) out[x] = resample_1d(r, ow, x);
    rows.push_back(out);
  }
  std::vector<std::vector<double>> res(oh, std::vector<double>(ow));
  for (size_t x = 0; x < ow; ++x) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(r[x]);
    for (size_t y = 0; y < oh; ++y) res[y][x] = resample_1d(col, oh, y);
  }
  return res;
}

inline std::vector<std::vector<double>> to_grid(const torch::Tensor& t2d) {
  auto t = t2d.to(torch::kFloat64).contiguous();
  std::vector<std::vector<double>> g(static_cast<size_t>(t.size(0)), std::vector<double>(static_cast<size_t>(t.size(1))));
  auto a = t.accessor<double, 2>();
  for (int64_t y = 0; y < t.size(0); ++y)
    for (int64_t x = 0; x < t.size(1); ++x) g[static_cast<size_t>(y)][static_cast<size_t>(x)] = a[y][x];
  return g;
}

inline torch::Tensor from_grid(const std::vector<std::vector<double>>& g) {
  auto t = torch::empty({static_cast<int64_t>(g.size()), static_cast<int64_t>(g[0].size())}, torch::kFloat64);
  auto a = t.accessor<double, 2>();
  for (size_t y = 0; y < g.size(); ++y)
    for (size_t x = 0; x < g[0].size(); ++x) a[static_cast<int64_t>(y)][static_cast<int64_t>(x)] = g[y][x];
  return t;
}

// Scalar bilinear sampling of src [C, H, W] at p + flow(p), coordinates
// clamped to the grid.
inline torch::Tensor warp_oracle(const torch::Tensor& src_in, const torch::Tensor& flow_in) {
  auto src = src_in.to(torch::kFloat64).contiguous();
  auto flow = flow_in.to(torch::kFloat64).contiguous();
  const int64_t c = src.size(0), h = src.size(1), w = src.size(2);
  auto out = torch::zeros_like(src);
  auto s = src.accessor<double, 3>();
  auto f = flow.accessor<double, 3>();
  auto o = out.accessor<double, 3>();
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      double sx = std::clamp(x + f[0][y][x], 0.0, static_cast<double>(w - 1));
      double sy = std::clamp(y + f[1][y][x], 0.0, static_cast<double>(h - 1));
      auto x0 = static_cast<int64_t>(std::floor(sx));
      auto y0 = static_cast<int64_t>(std::floor(sy));
      int64_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      double tx = sx - static_cast<double>(x0), ty = sy - static_cast<double>(y0);
      for (int64_t k = 0; k < c; ++k) {
        o[k][y][x] = (1 - ty) * ((1 - tx) * s[k][y0][x0] + tx * s[k][y0][x1]) +
                     ty * ((1 - tx) * s[k][y1][x0] + tx * s[k][y1][x1]);
      }
    }
  }
  return out;
}

// Central finite-difference gradient of a scalar function of `x` (float64).
template <class F>
torch::Tensor numeric_gradient(F&& fn, const torch::Tensor& x, double h = 1e-4) {
  auto base = x.detach().clone();
  auto grad = torch::zeros_like(base);
  auto flat = base.view({-1});
  auto gflat = grad.view({-1});
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double v = flat[i].item<double>();
    flat[i] = v + h;
    const double up = fn(base);
    flat[i] = v - h;
    const double down = fn(base);
    flat[i] = v;
    gflat[i] = (up - down) / (2 * h);
  }
  return grad;
}

inline double relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric) {
  const double denom = std::max(numeric.norm().item<double>(), 1e-12);
  return (analytic - numeric).norm().item<double>() / denom;
}

// Separable Gaussian blur (replicate border) used as an independent low-pass.
inline torch::Tensor gaussian_blur(const torch::Tensor& img, double sigma, int radius) {
  std::vector<double> k;
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += k.back();
  }
  auto src = img.to(torch::kFloat64);
  const int64_t h = src.size(-2), w = src.size(-1);
  auto out_x = torch::zeros_like(src);
  for (int i = -radius; i <= radius; ++i) {
    auto idx = torch::arange(w, torch::kLong).add(i).clamp(0, w - 1);
    out_x += k[static_cast<size_t>(i + radius)] / sum * src.index_select(-1, idx);
  }
  auto out = torch::zeros_like(src);
  for (int i = -radius; i <= radius; ++i) {
    auto idx = torch::arange(h, torch::kLong).add(i).clamp(0, h - 1);
    out += k[static_cast<size_t>(i + radius)] / sum * out_x.index_select(-2, idx);
  }
  return out.to(img.dtype());
}

inline Sequence clip7() { return read_sequence(data_dir() / "clip7", 0, 0, 0); }

inline Frame natural(int i) {
  char name[16];
  std::snprintf(name, sizeof name, "%04d.png", i);
  return read_image(data_dir() / "natural" / name);
}

}  // namespace sddc::test
