#pragma once

#include <torch/torch.h>

// Layer building blocks shared by the learned modules. Every spatial
// convolution uses replicate padding so that a spatially constant input maps
// to a spatially constant output.
namespace sddc::nn {

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel = 3, int64_t stride = 1);

torch::Tensor lrelu(const torch::Tensor& x);

/// Nearest-neighbour 2x upsampling of the last two dims.
torch::Tensor upsample_nearest2x(const torch::Tensor& x);

void zero_(torch::nn::Conv2d& layer);

/// x + conv(lrelu(conv(x)))
class ResBlockImpl : public torch::nn::Module {
 public:
  explicit ResBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Stride-2 residual block: conv(s2) -> lrelu -> conv, plus a strided 1x1 skip.
class ResidualDownImpl : public torch::nn::Module {
 public:
  ResidualDownImpl(int64_t in, int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d& last_conv() { return conv2_; }
  torch::nn::Conv2d& skip_conv() { return skip_; }

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
};
TORCH_MODULE(ResidualDown);

/// 2x upsampling residual block: nearest upsample, then conv -> lrelu -> conv
/// with a 1x1 skip.
class ResidualUpImpl : public torch::nn::Module {
 public:
  ResidualUpImpl(int64_t in, int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
};
TORCH_MODULE(ResidualUp);

}  // namespace sddc::nn
