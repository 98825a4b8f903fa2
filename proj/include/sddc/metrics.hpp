#pragma once

#include <torch/torch.h>

namespace sddc {

/// Mean squared error over all samples, evaluated in float64.
double mse(const torch::Tensor& a, const torch::Tensor& b);

/// 10 * log10(1 / MSE) for samples in [0, 1]. Identical inputs give +inf,
/// which callers treat as the lossless flag.
double psnr(const torch::Tensor& a, const torch::Tensor& b);
inline bool is_lossless(double psnr_db) { return std::isinf(psnr_db) && psnr_db > 0; }

/// Number of MS-SSIM scales used for an H x W input: 5 from 160 px up,
/// fewer below (one per halving that keeps the side at 10 px or more).
int ms_ssim_scales(int64_t height, int64_t width);

/// Multi-scale SSIM with the standard constants (11-tap Gaussian, sigma 1.5,
/// K1 = 0.01, K2 = 0.03, weights 0.0448/0.2856/0.3001/0.2363/0.1333,
/// renormalized when fewer scales are used). Inputs are [C, H, W] or
/// [N, C, H, W] in [0, 1]; the result is averaged over the batch.
/// Differentiable; works in the dtype of the inputs.
torch::Tensor ms_ssim_tensor(const torch::Tensor& a, const torch::Tensor& b);

/// Scalar MS-SSIM computed in float64.
double ms_ssim(const torch::Tensor& a, const torch::Tensor& b);

}  // namespace sddc
