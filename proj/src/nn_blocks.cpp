#include "sddc/nn_blocks.hpp"

namespace sddc::nn {

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride) {
  auto opts = torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(kernel / 2);
  if (kernel > 1) opts.padding_mode(torch::kReplicate);
  return torch::nn::Conv2d(opts);
}

torch::Tensor lrelu(const torch::Tensor& x) {
  return torch::leaky_relu(x, 0.1);
}

torch::Tensor upsample_nearest2x(const torch::Tensor& x) {
  return x.repeat_interleave(2, -2).repeat_interleave(2, -1);
}

void zero_(torch::nn::Conv2d& layer) {
  torch::NoGradGuard no_grad;
  layer->weight.zero_();
  if (layer->bias.defined()) layer->bias.zero_();
}

ResBlockImpl::ResBlockImpl(int64_t channels)
    : conv1_(register_module("conv1", conv(channels, channels))),
      conv2_(register_module("conv2", conv(channels, channels))) {}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  return x + conv2_(lrelu(conv1_(x)));
}

ResidualDownImpl::ResidualDownImpl(int64_t in, int64_t out)
    : conv1_(register_module("conv1", conv(in, out, 3, 2))),
      conv2_(register_module("conv2", conv(out, out))),
      skip_(register_module("skip", conv(in, out, 1, 2))) {}

torch::Tensor ResidualDownImpl::forward(const torch::Tensor& x) {
  return conv2_(lrelu(conv1_(x))) + skip_(x);
}

ResidualUpImpl::ResidualUpImpl(int64_t in, int64_t out)
    : conv1_(register_module("conv1", conv(in, out))),
      conv2_(register_module("conv2", conv(out, out))),
      skip_(register_module("skip", conv(in, out, 1))) {}

torch::Tensor ResidualUpImpl::forward(const torch::Tensor& x) {
  auto up = upsample_nearest2x(x);
  return conv2_(lrelu(conv1_(up))) + skip_(up);
}

}  // namespace sddc::nn
