#include "sddc/motion_codec.hpp"

#include "sddc/error.hpp"

namespace sddc {

MotionCodecImpl::MotionCodecImpl(MotionCodecConfig config) : config_(config) {
  const int64_t c = config.latent_channels;
  const int64_t ch = config.hyper_channels;
  int64_t in = 4;
  for (int i = 0; i < 4; ++i) {
    analysis_.push_back(register_module("analysis" + std::to_string(i), nn::ResidualDown(in, c)));
    in = c;
  }
  for (int i = 0; i < 4; ++i) {
    const int64_t out = i < 3 ? c : c / 2;
    synthesis_.push_back(register_module("synthesis" + std::to_string(i), nn::ResidualUp(in, out)));
    in = out;
  }
  synthesis_out_ = register_module("synthesis_out", nn::conv(in, 4));
  hyper_down1_ = register_module("hyper_down1", nn::ResidualDown(c, ch));
  hyper_down2_ = register_module("hyper_down2", nn::ResidualDown(ch, ch));
  hyper_up1_ = register_module("hyper_up1", nn::ResidualUp(ch, c));
  hyper_up2_ = register_module("hyper_up2", nn::ResidualUp(c, c));
  param_predictor_ = register_module("params", ParamPredictor(c, 0, c));
  hyper_density_ = register_module("hyper_density", HyperDensity(ch));
}

torch::Tensor MotionCodecImpl::analyze(const torch::Tensor& flows) {
  auto x = flows;
  for (auto& block : analysis_) x = block->forward(x);
  return x;
}

MotionLatent MotionCodecImpl::encode(const FlowField& structure, const FlowField& detail, QuantMode mode,
                                     std::optional<at::Generator> generator) {
  const auto& vs = structure.vectors;
  const auto& vd = detail.vectors;
  if (vs.sizes() != vd.sizes()) throw ShapeError("structure and detail flows differ in shape");
  if (vs.size(2) % 64 != 0 || vs.size(3) % 64 != 0) {
    throw ShapeError("motion coding needs flow dims that are multiples of 64 (got " + std::to_string(vs.size(2)) +
                     "x" + std::to_string(vs.size(3)) + ")");
  }
  auto y = analyze(torch::cat({vs, vd}, 1));
  auto z = hyper_down2_(hyper_down1_(y));
  MotionLatent m;
  m.hyper = quantize(z, mode, generator);
  m.hyper_params = hyper_params(m.hyper.sizes());
  m.y = quantize(y, mode, generator);
  m.params = params_from_hyper(m.hyper);
  return m;
}

LaplaceParams MotionCodecImpl::params_from_hyper(const torch::Tensor& hyper_hat) {
  return param_predictor_(hyper_up2_(hyper_up1_(hyper_hat)));
}

std::pair<FlowField, FlowField> MotionCodecImpl::decode(const torch::Tensor& y_hat) {
  if (y_hat.dim() != 4 || y_hat.size(1) != config_.latent_channels) {
    throw ShapeError("motion latent must be [N, " + std::to_string(config_.latent_channels) + ", h, w]");
  }
  auto x = y_hat;
  for (auto& block : synthesis_) x = block->forward(x);
  auto flows = synthesis_out_(nn::lrelu(x));
  auto parts = flows.chunk(2, 1);
  return {FlowField{parts[0].contiguous(), FlowKind::structure}, FlowField{parts[1].contiguous(), FlowKind::detail}};
}

}  // namespace sddc
