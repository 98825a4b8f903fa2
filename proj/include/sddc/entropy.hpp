#pragma once

#include <torch/torch.h>

#include <optional>
#include <span>

#include "sddc/range_coder.hpp"

namespace sddc {

enum class QuantMode { train, infer };

inline constexpr double kScaleMin = 0.01;
inline constexpr double kProbabilityFloor = 1.0 / 65536.0;

/// infer: round half to even. train: v + u with u ~ U(-0.5, 0.5) drawn from
/// `generator` (or the global torch generator when none is given).
torch::Tensor quantize(const torch::Tensor& v, QuantMode mode,
                       std::optional<at::Generator> generator = std::nullopt);

struct LaplaceParams {
  torch::Tensor mu;
  torch::Tensor scale;  // >= kScaleMin
};

struct BitEstimate {
  double bits = 0.0;
};

/// max(x, bound) with gradient passed through wherever it would raise x.
torch::Tensor lower_bound(const torch::Tensor& x, double bound);

/// Per-element probability of the unit bin around q, floored at 2^-16.
/// Differentiable in q, mu and scale.
torch::Tensor laplace_likelihood(const torch::Tensor& q, const LaplaceParams& params);

/// Sum of -log2 p as a scalar tensor (keeps the autograd graph).
torch::Tensor laplace_bits_tensor(const torch::Tensor& q, const LaplaceParams& params);

/// Same quantity evaluated in float64 outside autograd.
BitEstimate laplace_bits(const torch::Tensor& q, const LaplaceParams& params);

/// Range-codes an integer-valued grid under `params` (same shape).
Bytes encode_latent(const torch::Tensor& q, const LaplaceParams& params);
/// Inverse of encode_latent; the result has the shape of params.mu and is
/// float32 holding integer values.
torch::Tensor decode_latent(std::span<const uint8_t> bytes, const LaplaceParams& params);

/// A quantized grid together with the model it is coded under.
struct CodedLatent {
  torch::Tensor q;
  LaplaceParams params;
};

/// Sum of laplace_bits over all given latents (0 for none / empty ones).
BitEstimate estimate_rate(std::span<const CodedLatent> latents);

/// Fuses hyper-decoded features and, optionally, a temporal prior (both at
/// latent resolution) into per-element Laplace parameters.
class ParamPredictorImpl : public torch::nn::Module {
 public:
  ParamPredictorImpl(int64_t hyper_channels, int64_t prior_channels, int64_t latent_channels);

  LaplaceParams forward(const torch::Tensor& hyper, const std::optional<torch::Tensor>& prior = std::nullopt);

 private:
  int64_t prior_channels_;
  int64_t latent_channels_;
  torch::nn::Conv2d fuse1_{nullptr}, fuse2_{nullptr};
};
TORCH_MODULE(ParamPredictor);

/// Learned per-channel zero-mean Laplace scales for the hyper latent.
class HyperDensityImpl : public torch::nn::Module {
 public:
  explicit HyperDensityImpl(int64_t channels);

  /// Parameters for a latent of the given [N, C, h, w] shape.
  LaplaceParams params(at::IntArrayRef shape);

 private:
  torch::Tensor log_scale_;
};
TORCH_MODULE(HyperDensity);

}  // namespace sddc
