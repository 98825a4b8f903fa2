#pragma once

#include <torch/torch.h>

#include <vector>

namespace sddc {

enum class FlowKind { structure, detail };

/// Dense displacement field [N, 2, H, W] in pixels at the resolution of the
/// grids it maps between; channel 0 is dx, channel 1 is dy.
struct FlowField {
  torch::Tensor vectors;
  FlowKind kind = FlowKind::structure;
};

/// output(p) = bilinear sample of `src` at p + flow(p); sample coordinates
/// are clamped to the grid (replicate border). `src` is [N, C, H, W] and
/// `flow` is [N, 2, H, W]. Differentiable in both arguments.
torch::Tensor warp(const torch::Tensor& src, const torch::Tensor& flow);

struct FlowPyramid {
  std::vector<torch::Tensor> levels;  // level l is [N, 2, H / 2^l, W / 2^l]
};

/// Level 0 is `flow`; each further level is the bilinear 2x downsample of
/// the previous one with magnitudes halved.
FlowPyramid build_pyramid(const torch::Tensor& flow, int levels = 3);

/// Coarse-to-fine residual flow estimator in the SpyNet mould: a three-level
/// image pyramid, and at each level a five-layer conv stack that refines the
/// upsampled coarser flow given (current, warped reference, flow).
class FlowNetImpl : public torch::nn::Module {
 public:
  explicit FlowNetImpl(int64_t channels = 32, int64_t image_channels = 3, int levels = 3);

  /// Flow that warps `ref` towards `cur`. Both are [N, C, H, W] with H and W
  /// divisible by 2^(levels-1).
  torch::Tensor forward(const torch::Tensor& cur, const torch::Tensor& ref);

  /// Output layer of the refinement stack at pyramid `level` (0 = finest).
  torch::nn::Conv2d& output_layer(int level);
  int levels() const { return static_cast<int>(stacks_.size()); }

 private:
  std::vector<torch::nn::Sequential> stacks_;
  std::vector<torch::nn::Conv2d> outputs_;
};
TORCH_MODULE(FlowNet);

FlowField estimate_flow(const torch::Tensor& cur, const torch::Tensor& ref, FlowNet& net, FlowKind kind);

}  // namespace sddc
