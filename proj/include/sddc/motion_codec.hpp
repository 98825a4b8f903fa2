#pragma once

#include <torch/torch.h>

#include <optional>
#include <utility>

#include "sddc/entropy.hpp"
#include "sddc/flow.hpp"
#include "sddc/nn_blocks.hpp"

namespace sddc {

/// Quantized joint motion latent: y at 1/16 resolution, hyper at 1/64, with
/// the Laplace parameters each is coded under.
struct MotionLatent {
  torch::Tensor y;
  torch::Tensor hyper;
  LaplaceParams params;
  LaplaceParams hyper_params;
};

struct MotionCodecConfig {
  int64_t latent_channels = 64;
  int64_t hyper_channels = 32;
};

/// Compresses the structure and detail flows jointly: they are concatenated
/// channel-wise, mapped to one latent by a stride-16 residual analysis
/// transform, and entropy-coded under a hyper prior.
class MotionCodecImpl : public torch::nn::Module {
 public:
  explicit MotionCodecImpl(MotionCodecConfig config = {});

  MotionLatent encode(const FlowField& structure, const FlowField& detail, QuantMode mode,
                      std::optional<at::Generator> generator = std::nullopt);

  /// Synthesis from a quantized latent back to (structure, detail) flows.
  std::pair<FlowField, FlowField> decode(const torch::Tensor& y_hat);

  /// Decoder-side entropy parameters of y given the quantized hyper latent.
  LaplaceParams params_from_hyper(const torch::Tensor& hyper_hat);
  LaplaceParams hyper_params(at::IntArrayRef shape) { return hyper_density_->params(shape); }

  const MotionCodecConfig& config() const { return config_; }
  nn::ResidualDown& analysis_output() { return analysis_.back(); }

 private:
  torch::Tensor analyze(const torch::Tensor& flows);

  MotionCodecConfig config_;
  std::vector<nn::ResidualDown> analysis_;
  std::vector<nn::ResidualUp> synthesis_;
  torch::nn::Conv2d synthesis_out_{nullptr};
  nn::ResidualDown hyper_down1_{nullptr}, hyper_down2_{nullptr};
  nn::ResidualUp hyper_up1_{nullptr}, hyper_up2_{nullptr};
  ParamPredictor param_predictor_{nullptr};
  HyperDensity hyper_density_{nullptr};
};
TORCH_MODULE(MotionCodec);

}  // namespace sddc
