#pragma once

#include <torch/torch.h>

#include <utility>

#include "sddc/flow.hpp"
#include "sddc/nn_blocks.hpp"

namespace sddc {

/// Temporal contexts at three scales: c0 [N, C, H, W], c1 [N, 2C, H/2, W/2],
/// c2 [N, 4C, H/4, W/4].
struct ContextSet {
  torch::Tensor c0, c1, c2;
};

/// ConvLSTM memory. h is bounded by 1 in magnitude; both are zero at the
/// start of every GOP.
struct RecurrentState {
  torch::Tensor h;
  torch::Tensor c;
};

RecurrentState reset_state(int64_t batch, int64_t channels, int64_t height, int64_t width,
                           const torch::TensorOptions& options = {});

void check_context_geometry(const ContextSet& ctx, int64_t channels, int64_t height, int64_t width);

/// One branch (structure or detail) of the short-term miner: multi-scale
/// features, warping by the matching flow pyramid, then coarse-to-fine
/// fusion with residual connections.
class ContextBranchImpl : public torch::nn::Module {
 public:
  explicit ContextBranchImpl(int64_t channels);
  ContextSet forward(const torch::Tensor& feature, const FlowPyramid& flows);

  /// Zeroes every weight and bias of the branch.
  void zero_();

 private:
  torch::nn::Conv2d extract0_{nullptr}, extract1_{nullptr}, extract2_{nullptr};
  torch::nn::Conv2d refine2_{nullptr};
  torch::nn::Conv2d lift2_{nullptr}, refine1_{nullptr};
  torch::nn::Conv2d lift1_{nullptr}, refine0_{nullptr};
};
TORCH_MODULE(ContextBranch);

/// Short-term temporal context mining on the structure/detail split of the
/// propagated reference feature. The branch outputs are summed per scale.
class ShortTermMinerImpl : public torch::nn::Module {
 public:
  ShortTermMinerImpl(int64_t channels, int sdd_factor = 2);

  ContextSet forward(const torch::Tensor& feature, const FlowField& structure, const FlowField& detail);

  ContextBranch& structure_branch() { return structure_; }
  ContextBranch& detail_branch() { return detail_; }

 private:
  int factor_;
  ContextBranch structure_{nullptr}, detail_{nullptr};
};
TORCH_MODULE(ShortTermMiner);

/// Convolutional LSTM over the reference feature; gates are produced by a
/// single 3x3 convolution over [F, H] in the order (i, o, f, g).
class ConvLstmImpl : public torch::nn::Module {
 public:
  explicit ConvLstmImpl(int64_t channels);

  /// Returns the updated state and the long-term context (== state.h).
  std::pair<RecurrentState, torch::Tensor> forward(const RecurrentState& state, const torch::Tensor& feature);

  torch::nn::Conv2d& gates() { return gates_; }
  int64_t channels() const { return channels_; }

 private:
  int64_t channels_;
  torch::nn::Conv2d gates_{nullptr};
};
TORCH_MODULE(ConvLstm);

/// Hierarchical fusion of the long-term context with the short-term
/// contexts. Each output scale is short + conv([long_l, short_l]); the output
/// convolutions start at zero so the fused contexts equal the short-term ones
/// at initialization.
class ContextFusionImpl : public torch::nn::Module {
 public:
  explicit ContextFusionImpl(int64_t channels);

  ContextSet forward(const torch::Tensor& long_term, const ContextSet& short_term);

  /// Output convolutions, scale 0..2.
  torch::nn::Conv2d& output_layer(int scale);

 private:
  torch::nn::Conv2d extract0_{nullptr}, extract1_{nullptr}, extract2_{nullptr};
  torch::nn::Conv2d refine2_{nullptr};
  torch::nn::Conv2d lift2_{nullptr}, refine1_{nullptr};
  torch::nn::Conv2d lift1_{nullptr}, refine0_{nullptr};
  torch::nn::Conv2d out0_{nullptr}, out1_{nullptr}, out2_{nullptr};
};
TORCH_MODULE(ContextFusion);

}  // namespace sddc
