#include "sddc/flow.hpp"

#include "sddc/error.hpp"
#include "sddc/nn_blocks.hpp"
#include "sddc/sdd.hpp"

namespace sddc {

torch::Tensor warp(const torch::Tensor& src, const torch::Tensor& flow) {
  if (src.dim() != 4 || flow.dim() != 4 || flow.size(1) != 2) {
    throw ShapeError("warp expects src [N,C,H,W] and flow [N,2,H,W]");
  }
  const int64_t n = src.size(0), c = src.size(1), h = src.size(2), w = src.size(3);
  if (flow.size(0) != n || flow.size(2) != h || flow.size(3) != w) {
    throw ShapeError("warp: flow and source dims differ");
  }
  auto opts = flow.options().requires_grad(false);
  auto gx = torch::arange(w, opts).view({1, 1, w});
  auto gy = torch::arange(h, opts).view({1, h, 1});
  // A NaN displacement samples in place instead of producing a wild index.
  auto safe = torch::nan_to_num(flow, 0.0);
  auto x = (gx + safe.select(1, 0)).clamp(0.0, static_cast<double>(w - 1));
  auto y = (gy + safe.select(1, 1)).clamp(0.0, static_cast<double>(h - 1));

  auto x0f = x.detach().floor();
  auto y0f = y.detach().floor();
  auto wx = (x - x0f).unsqueeze(1);
  auto wy = (y - y0f).unsqueeze(1);
  auto x0 = x0f.to(torch::kLong);
  auto y0 = y0f.to(torch::kLong);
  auto x1 = (x0 + 1).clamp_max(w - 1);
  auto y1 = (y0 + 1).clamp_max(h - 1);

  auto flat = src.reshape({n, c, h * w});
  auto tap = [&](const torch::Tensor& yi, const torch::Tensor& xi) {
    auto idx = (yi * w + xi).view({n, 1, h * w}).expand({n, c, h * w});
    return flat.gather(2, idx).view({n, c, h, w});
  };
  return tap(y0, x0) * ((1.0 - wx) * (1.0 - wy)) + tap(y0, x1) * (wx * (1.0 - wy)) +
         tap(y1, x0) * ((1.0 - wx) * wy) + tap(y1, x1) * (wx * wy);
}

FlowPyramid build_pyramid(const torch::Tensor& flow, int levels) {
  if (levels < 1) throw ShapeError("pyramid needs at least one level");
  const int64_t div = int64_t{1} << (levels - 1);
  if (flow.size(-2) % div != 0 || flow.size(-1) % div != 0) {
    throw ShapeError("flow dims not divisible by " + std::to_string(div) + " for a " + std::to_string(levels) +
                     "-level pyramid");
  }
  FlowPyramid p;
  p.levels.push_back(flow);
  for (int l = 1; l < levels; ++l) p.levels.push_back(downsample(p.levels.back(), 2) * 0.5);
  return p;
}

FlowNetImpl::FlowNetImpl(int64_t channels, int64_t image_channels, int levels) {
  const int64_t in = 2 * image_channels + 2;
  for (int l = 0; l < levels; ++l) {
    torch::nn::Sequential stack;
    stack->push_back(nn::conv(in, channels));
    stack->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.1)));
    stack->push_back(nn::conv(channels, channels));
    stack->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.1)));
    stack->push_back(nn::conv(channels, channels));
    stack->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.1)));
    stack->push_back(nn::conv(channels, channels / 2));
    stack->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.1)));
    auto out = nn::conv(channels / 2, 2);
    nn::zero_(out);  // starts as a zero-flow predictor
    stacks_.push_back(register_module("level" + std::to_string(l), stack));
    outputs_.push_back(register_module("level" + std::to_string(l) + "_out", out));
  }
}

torch::nn::Conv2d& FlowNetImpl::output_layer(int level) {
  return outputs_.at(static_cast<size_t>(level));
}

torch::Tensor FlowNetImpl::forward(const torch::Tensor& cur, const torch::Tensor& ref) {
  if (cur.sizes() != ref.sizes()) throw ShapeError("flow estimation: current and reference shapes differ");
  const int levels = static_cast<int>(stacks_.size());
  std::vector<torch::Tensor> cur_pyr{cur}, ref_pyr{ref};
  for (int l = 1; l < levels; ++l) {
    cur_pyr.push_back(downsample(cur_pyr.back(), 2));
    ref_pyr.push_back(downsample(ref_pyr.back(), 2));
  }
  const auto& coarse = cur_pyr.back();
  auto flow = torch::zeros({coarse.size(0), 2, coarse.size(2), coarse.size(3)}, cur.options());
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) flow = upsample(flow, 2) * 2.0;
    auto warped = warp(ref_pyr[static_cast<size_t>(l)], flow);
    auto features = stacks_[static_cast<size_t>(l)]->forward(torch::cat({cur_pyr[static_cast<size_t>(l)], warped, flow}, 1));
    flow = flow + outputs_[static_cast<size_t>(l)](features);
  }
  return flow;
}

FlowField estimate_flow(const torch::Tensor& cur, const torch::Tensor& ref, FlowNet& net, FlowKind kind) {
  return {net->forward(cur, ref), kind};
}

}  // namespace sddc
