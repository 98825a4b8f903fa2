#include "sddc/metrics.hpp"

#include <array>
#include <cmath>

#include "sddc/error.hpp"

namespace sddc {

namespace {

constexpr std::array<double, 5> kScaleWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("metric inputs differ in shape");
}

torch::Tensor gaussian_taps(const torch::TensorOptions& options) {
  auto x = torch::arange(kWindow, torch::TensorOptions().dtype(torch::kFloat64)) - (kWindow - 1) / 2.0;
  auto g = torch::exp(-(x * x) / (2.0 * kSigma * kSigma));
  return (g / g.sum()).to(options);
}

// Separable valid-mode Gaussian blur of [M, 1, H, W]; an axis shorter than
// the window is left unfiltered.
torch::Tensor blur(const torch::Tensor& x, const torch::Tensor& taps) {
  auto y = x;
  if (y.size(3) >= kWindow) y = torch::conv2d(y, taps.view({1, 1, 1, kWindow}));
  if (y.size(2) >= kWindow) y = torch::conv2d(y, taps.view({1, 1, kWindow, 1}));
  return y;
}

// Returns {ssim, cs} averaged per image: shape [N] each.
std::pair<torch::Tensor, torch::Tensor> ssim_terms(const torch::Tensor& a, const torch::Tensor& b,
                                                   const torch::Tensor& taps) {
  const int64_t n = a.size(0), c = a.size(1), h = a.size(2), w = a.size(3);
  auto fa = a.reshape({n * c, 1, h, w});
  auto fb = b.reshape({n * c, 1, h, w});
  auto mu_a = blur(fa, taps);
  auto mu_b = blur(fb, taps);
  auto mu_aa = mu_a * mu_a;
  auto mu_bb = mu_b * mu_b;
  auto mu_ab = mu_a * mu_b;
  auto s_aa = blur(fa * fa, taps) - mu_aa;
  auto s_bb = blur(fb * fb, taps) - mu_bb;
  auto s_ab = blur(fa * fb, taps) - mu_ab;
  auto cs_map = (2.0 * s_ab + kC2) / (s_aa + s_bb + kC2);
  auto l_map = (2.0 * mu_ab + kC1) / (mu_aa + mu_bb + kC1);
  auto ssim_map = l_map * cs_map;
  return {ssim_map.reshape({n, -1}).mean(1), cs_map.reshape({n, -1}).mean(1)};
}

}  // namespace

double mse(const torch::Tensor& a, const torch::Tensor& b) {
  check_same(a, b);
  torch::NoGradGuard no_grad;
  auto d = a.detach().to(torch::kFloat64) - b.detach().to(torch::kFloat64);
  return (d * d).mean().item<double>();
}

double psnr(const torch::Tensor& a, const torch::Tensor& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

int ms_ssim_scales(int64_t height, int64_t width) {
  const int64_t side = std::min(height, width);
  int scales = 1;
  while (scales < 5 && (side >> scales) >= 10) ++scales;
  return scales;
}

torch::Tensor ms_ssim_tensor(const torch::Tensor& a_in, const torch::Tensor& b_in) {
  check_same(a_in, b_in);
  auto a = a_in.dim() == 3 ? a_in.unsqueeze(0) : a_in;
  auto b = b_in.dim() == 3 ? b_in.unsqueeze(0) : b_in;
  if (a.dim() != 4) throw ShapeError("ms_ssim expects [C,H,W] or [N,C,H,W]");
  const int scales = ms_ssim_scales(a.size(2), a.size(3));
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kScaleWeights[static_cast<size_t>(s)];

  auto taps = gaussian_taps(a.options().requires_grad(false));
  torch::Tensor result = torch::ones({a.size(0)}, a.options().requires_grad(false));
  for (int s = 0; s < scales; ++s) {
    auto [ssim, cs] = ssim_terms(a, b, taps);
    const double wgt = kScaleWeights[static_cast<size_t>(s)] / weight_sum;
    const auto& term = s == scales - 1 ? ssim : cs;
    result = result * torch::pow(term.clamp_min(1e-10), wgt);
    if (s + 1 < scales) {
      a = torch::avg_pool2d(a, 2);
      b = torch::avg_pool2d(b, 2);
    }
  }
  return result.mean();
}

double ms_ssim(const torch::Tensor& a, const torch::Tensor& b) {
  torch::NoGradGuard no_grad;
  return ms_ssim_tensor(a.detach().to(torch::kFloat64), b.detach().to(torch::kFloat64)).item<double>();
}

}  // namespace sddc
