#pragma once

#include <torch/torch.h>

namespace sddc {

/// Structure/detail split of a grid: structure = Up(Down(g)), detail = g - structure.
struct SddPair {
  torch::Tensor structure;
  torch::Tensor detail;
  int factor = 2;
};

/// Bilinear resampling of the last two dims to (out_h, out_w) using
/// half-pixel sample centers (align_corners = false) and no anti-alias
/// prefilter. Differentiable in the input.
torch::Tensor bilinear_resize(const torch::Tensor& grid, int64_t out_h, int64_t out_w);

torch::Tensor downsample(const torch::Tensor& grid, int factor);
torch::Tensor upsample(const torch::Tensor& grid, int factor);

/// Splits `grid` (any rank >= 2; the last two dims are spatial) into its
/// structure and detail parts. Throws ShapeError if H or W is not divisible
/// by `factor`.
SddPair decompose(const torch::Tensor& grid, int factor = 2);

torch::Tensor recompose(const SddPair& pair);

}  // namespace sddc
