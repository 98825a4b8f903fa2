#pragma once

#include <torch/torch.h>

#include <optional>
#include <span>

#include "sddc/context.hpp"
#include "sddc/entropy.hpp"
#include "sddc/frames_io.hpp"
#include "sddc/nn_blocks.hpp"

namespace sddc {

struct FrameLatent {
  torch::Tensor y;
  torch::Tensor hyper;
  LaplaceParams params;
  LaplaceParams hyper_params;
};

struct Reconstruction {
  torch::Tensor frame;    // [N, 3, H, W], clamped to [0, 1]
  torch::Tensor feature;  // [N, C_f, H, W], reference feature for the next frame
};

struct FrameCodecConfig {
  int64_t feature_channels = 48;
  int64_t latent_channels = 96;
  int64_t hyper_channels = 64;
};

/// Conditional (contextual) encoder/decoder. Contexts are concatenated into
/// the analysis transform at strides 1, 2 and 4 and into the synthesis
/// transform at the mirrored positions; the coarsest context also serves as
/// a temporal prior for the entropy parameters.
class FrameCodecImpl : public torch::nn::Module {
 public:
  explicit FrameCodecImpl(FrameCodecConfig config = {});

  FrameLatent encode(const torch::Tensor& frame, const ContextSet& ctx, QuantMode mode,
                     std::optional<at::Generator> generator = std::nullopt);

  /// Entropy parameters of y from the quantized hyper latent and the
  /// contexts. Encoder and decoder both call this.
  LaplaceParams params_from(const torch::Tensor& hyper_hat, const ContextSet& ctx);
  LaplaceParams hyper_params(at::IntArrayRef shape) { return hyper_density_->params(shape); }

  Reconstruction decode(const torch::Tensor& y_hat, const ContextSet& ctx);

  const FrameCodecConfig& config() const { return config_; }

 private:
  FrameCodecConfig config_;
  // analysis
  torch::nn::Conv2d enc_in_{nullptr}, enc_mix1_{nullptr}, enc_mix2_{nullptr};
  nn::ResidualDown enc_down1_{nullptr}, enc_down2_{nullptr}, enc_down3_{nullptr}, enc_down4_{nullptr};
  // hyper prior + temporal prior
  nn::ResidualDown hyper_down1_{nullptr}, hyper_down2_{nullptr};
  nn::ResidualUp hyper_up1_{nullptr}, hyper_up2_{nullptr};
  nn::ResidualDown prior_down1_{nullptr}, prior_down2_{nullptr};
  ParamPredictor param_predictor_{nullptr};
  HyperDensity hyper_density_{nullptr};
  // synthesis
  nn::ResidualUp dec_up1_{nullptr}, dec_up2_{nullptr}, dec_up3_{nullptr}, dec_up4_{nullptr};
  torch::nn::Conv2d dec_mix2_{nullptr}, dec_mix1_{nullptr};
  // frame generator (small U-Net)
  torch::nn::Conv2d gen_in_{nullptr}, gen_down_{nullptr}, gen_mid_{nullptr}, gen_up_{nullptr};
  nn::ResBlock gen_res_{nullptr};
  torch::nn::Conv2d gen_feature_{nullptr}, gen_out_{nullptr};
};
TORCH_MODULE(FrameCodec);

/// Lifts a decoded intra frame to the first reference feature of a GOP.
class IntraFeatureImpl : public torch::nn::Module {
 public:
  explicit IntraFeatureImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& frame);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(IntraFeature);

// Verbatim intra coding: big-endian u16 width, u16 height, then the 8-bit
// RGB samples in interleaved raster order.
inline constexpr size_t kIntraHeaderBytes = 4;
Bytes intra_encode(const Frame& frame);
Frame intra_decode(std::span<const uint8_t> payload);

}  // namespace sddc
