#include "sddc/frame_codec.hpp"

#include "sddc/error.hpp"

namespace sddc {

FrameCodecImpl::FrameCodecImpl(FrameCodecConfig config) : config_(config) {
  const int64_t cf = config.feature_channels;
  const int64_t cy = config.latent_channels;
  const int64_t ch = config.hyper_channels;
  const int64_t e0 = 64;  // analysis width at full and half resolution

  enc_in_ = register_module("enc_in", nn::conv(3 + cf, e0));
  enc_down1_ = register_module("enc_down1", nn::ResidualDown(e0, e0));
  enc_mix1_ = register_module("enc_mix1", nn::conv(e0 + 2 * cf, cy));
  enc_down2_ = register_module("enc_down2", nn::ResidualDown(cy, cy));
  enc_mix2_ = register_module("enc_mix2", nn::conv(cy + 4 * cf, cy));
  enc_down3_ = register_module("enc_down3", nn::ResidualDown(cy, cy));
  enc_down4_ = register_module("enc_down4", nn::ResidualDown(cy, cy));

  hyper_down1_ = register_module("hyper_down1", nn::ResidualDown(cy, ch));
  hyper_down2_ = register_module("hyper_down2", nn::ResidualDown(ch, ch));
  hyper_up1_ = register_module("hyper_up1", nn::ResidualUp(ch, cy));
  hyper_up2_ = register_module("hyper_up2", nn::ResidualUp(cy, cy));
  prior_down1_ = register_module("prior_down1", nn::ResidualDown(4 * cf, cy));
  prior_down2_ = register_module("prior_down2", nn::ResidualDown(cy, cy));
  param_predictor_ = register_module("params", ParamPredictor(cy, cy, cy));
  hyper_density_ = register_module("hyper_density", HyperDensity(ch));

  dec_up1_ = register_module("dec_up1", nn::ResidualUp(cy, cy));
  dec_up2_ = register_module("dec_up2", nn::ResidualUp(cy, cy));
  dec_mix2_ = register_module("dec_mix2", nn::conv(cy + 4 * cf, cy));
  dec_up3_ = register_module("dec_up3", nn::ResidualUp(cy, e0));
  dec_mix1_ = register_module("dec_mix1", nn::conv(e0 + 2 * cf, e0));
  dec_up4_ = register_module("dec_up4", nn::ResidualUp(e0, cf));

  gen_in_ = register_module("gen_in", nn::conv(2 * cf, cf));
  gen_down_ = register_module("gen_down", nn::conv(cf, 2 * cf, 3, 2));
  gen_mid_ = register_module("gen_mid", nn::conv(4 * cf, 2 * cf));
  gen_up_ = register_module("gen_up", nn::conv(2 * cf, cf));
  gen_res_ = register_module("gen_res", nn::ResBlock(cf));
  gen_feature_ = register_module("gen_feature", nn::conv(cf, cf));
  gen_out_ = register_module("gen_out", nn::conv(cf, 3));
  torch::NoGradGuard no_grad;
  gen_out_->bias.fill_(0.5);
}

FrameLatent FrameCodecImpl::encode(const torch::Tensor& frame, const ContextSet& ctx, QuantMode mode,
                                   std::optional<at::Generator> generator) {
  if (frame.dim() != 4 || frame.size(1) != 3) throw ShapeError("frame must be [N, 3, H, W]");
  if (frame.size(2) % 64 != 0 || frame.size(3) % 64 != 0) throw ShapeError("frame dims must be multiples of 64");
  check_context_geometry(ctx, config_.feature_channels, frame.size(2), frame.size(3));

  auto x = nn::lrelu(enc_in_(torch::cat({frame, ctx.c0}, 1)));
  x = enc_down1_(x);
  x = nn::lrelu(enc_mix1_(torch::cat({x, ctx.c1}, 1)));
  x = enc_down2_(x);
  x = nn::lrelu(enc_mix2_(torch::cat({x, ctx.c2}, 1)));
  auto y = enc_down4_(nn::lrelu(enc_down3_(x)));
  auto z = hyper_down2_(hyper_down1_(y));

  FrameLatent out;
  out.hyper = quantize(z, mode, generator);
  out.hyper_params = hyper_params(out.hyper.sizes());
  out.y = quantize(y, mode, generator);
  out.params = params_from(out.hyper, ctx);
  return out;
}

LaplaceParams FrameCodecImpl::params_from(const torch::Tensor& hyper_hat, const ContextSet& ctx) {
  auto hyper = hyper_up2_(hyper_up1_(hyper_hat));
  auto prior = prior_down2_(nn::lrelu(prior_down1_(ctx.c2)));
  return param_predictor_(hyper, prior);
}

Reconstruction FrameCodecImpl::decode(const torch::Tensor& y_hat, const ContextSet& ctx) {
  if (y_hat.dim() != 4 || y_hat.size(1) != config_.latent_channels) throw ShapeError("frame latent channel mismatch");
  const int64_t h = y_hat.size(2) * 16, w = y_hat.size(3) * 16;
  check_context_geometry(ctx, config_.feature_channels, h, w);

  auto x = dec_up2_(nn::lrelu(dec_up1_(y_hat)));
  x = nn::lrelu(dec_mix2_(torch::cat({x, ctx.c2}, 1)));
  x = dec_up3_(x);
  x = nn::lrelu(dec_mix1_(torch::cat({x, ctx.c1}, 1)));
  auto a = dec_up4_(x);

  auto u0 = nn::lrelu(gen_in_(torch::cat({a, ctx.c0}, 1)));
  auto u1 = nn::lrelu(gen_down_(u0));
  u1 = nn::lrelu(gen_mid_(torch::cat({u1, ctx.c1}, 1)));
  auto merged = u0 + gen_up_(nn::upsample_nearest2x(u1));
  auto feature = gen_feature_(gen_res_(merged));
  auto raw = gen_out_(nn::lrelu(feature));
  auto frame = raw.clamp(0.0, 1.0);
  // While training, let gradients pass the clamp unchanged.
  if (torch::GradMode::is_enabled()) frame = raw + (frame - raw).detach();
  return {frame, feature};
}

IntraFeatureImpl::IntraFeatureImpl(int64_t channels)
    : conv1_(register_module("conv1", nn::conv(3, channels))),
      conv2_(register_module("conv2", nn::conv(channels, channels))) {}

torch::Tensor IntraFeatureImpl::forward(const torch::Tensor& frame) {
  return conv2_(nn::lrelu(conv1_(frame)));
}

Bytes intra_encode(const Frame& frame) {
  const int64_t h = frame.height(), w = frame.width();
  if (h > 0xFFFF || w > 0xFFFF) throw Error("intra frame too large for the verbatim payload");
  auto q = frame.pixels.detach().clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  Bytes out;
  out.reserve(kIntraHeaderBytes + static_cast<size_t>(q.numel()));
  out.push_back(static_cast<uint8_t>(w >> 8));
  out.push_back(static_cast<uint8_t>(w & 0xFF));
  out.push_back(static_cast<uint8_t>(h >> 8));
  out.push_back(static_cast<uint8_t>(h & 0xFF));
  out.insert(out.end(), q.data_ptr<uint8_t>(), q.data_ptr<uint8_t>() + q.numel());
  return out;
}

Frame intra_decode(std::span<const uint8_t> payload) {
  if (payload.size() < kIntraHeaderBytes) throw BitstreamError("intra payload shorter than its header");
  const int64_t w = (int64_t{payload[0]} << 8) | payload[1];
  const int64_t h = (int64_t{payload[2]} << 8) | payload[3];
  const auto expected = kIntraHeaderBytes + static_cast<size_t>(w * h * 3);
  if (payload.size() != expected) {
    throw BitstreamError("intra payload length " + std::to_string(payload.size()) + " does not match " +
                         std::to_string(w) + "x" + std::to_string(h) + " (expected " + std::to_string(expected) +
                         ")");
  }
  auto raster = torch::from_blob(const_cast<uint8_t*>(payload.data() + kIntraHeaderBytes), {h, w, 3}, torch::kUInt8);
  return {raster.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous(), 0};
}

}  // namespace sddc
