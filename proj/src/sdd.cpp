#include "sddc/sdd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sddc/error.hpp"

namespace sddc {

namespace {

struct Taps {
  torch::Tensor lo;    // int64 [out]
  torch::Tensor hi;    // int64 [out]
  torch::Tensor frac;  // [out], weight of `hi`
};

// Two bilinear taps per output sample along one axis.
Taps axis_taps(int64_t in, int64_t out, const torch::TensorOptions& options) {
  std::vector<int64_t> lo(out), hi(out);
  std::vector<double> frac(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int64_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto i0 = std::min(static_cast<int64_t>(std::floor(src)), in - 1);
    lo[i] = i0;
    hi[i] = std::min(i0 + 1, in - 1);
    frac[i] = src - static_cast<double>(i0);
  }
  auto long_opts = torch::TensorOptions().dtype(torch::kLong);
  return {torch::tensor(lo, long_opts), torch::tensor(hi, long_opts),
          torch::tensor(frac, torch::TensorOptions().dtype(torch::kFloat64)).to(options)};
}

torch::Tensor resize_axis(const torch::Tensor& grid, int64_t dim, int64_t out) {
  const int64_t in = grid.size(dim);
  if (in == out) return grid;
  auto taps = axis_taps(in, out, grid.options().requires_grad(false));
  std::vector<int64_t> shape(static_cast<size_t>(grid.dim()), 1);
  shape[static_cast<size_t>(dim < 0 ? dim + grid.dim() : dim)] = out;
  auto frac = taps.frac.view(shape);
  return grid.index_select(dim, taps.lo) * (1.0 - frac) + grid.index_select(dim, taps.hi) * frac;
}

}  // namespace

torch::Tensor bilinear_resize(const torch::Tensor& grid, int64_t out_h, int64_t out_w) {
  TORCH_CHECK(grid.dim() >= 2, "bilinear_resize needs a grid with at least 2 dims");
  const int64_t h = grid.size(-2), w = grid.size(-1);
  if (h == out_h && w == out_w) return grid;
  return resize_axis(resize_axis(grid, -1, out_w), -2, out_h);
}

torch::Tensor downsample(const torch::Tensor& grid, int factor) {
  return bilinear_resize(grid, grid.size(-2) / factor, grid.size(-1) / factor);
}

torch::Tensor upsample(const torch::Tensor& grid, int factor) {
  return bilinear_resize(grid, grid.size(-2) * factor, grid.size(-1) * factor);
}

SddPair decompose(const torch::Tensor& grid, int factor) {
  if (factor < 1) throw ShapeError("decomposition factor must be >= 1");
  if (grid.dim() < 2) throw ShapeError("decompose needs a grid with at least 2 dims");
  if (grid.size(-2) % factor != 0 || grid.size(-1) % factor != 0) {
    throw ShapeError("grid " + std::to_string(grid.size(-2)) + "x" + std::to_string(grid.size(-1)) +
                     " is not divisible by factor " + std::to_string(factor) + "; pad first");
  }
  auto structure = upsample(downsample(grid, factor), factor);
  auto detail = grid - structure;
  return {structure, detail, factor};
}

torch::Tensor recompose(const SddPair& pair) {
  if (pair.structure.sizes() != pair.detail.sizes()) {
    throw ShapeError("structure and detail shapes differ");
  }
  return pair.structure + pair.detail;
}

}  // namespace sddc
