#include "sddc/entropy.hpp"

#include <cmath>

#include "sddc/error.hpp"
#include "sddc/nn_blocks.hpp"

namespace sddc {

torch::Tensor quantize(const torch::Tensor& v, QuantMode mode, std::optional<at::Generator> generator) {
  if (mode == QuantMode::infer) return torch::round(v);  // round half to even
  auto u = generator ? torch::rand(v.sizes(), *generator, v.options().requires_grad(false))
                     : torch::rand(v.sizes(), v.options().requires_grad(false));
  return v + (u - 0.5);
}

namespace {

// max(x, bound) whose gradient still flows where x sits below the bound and
// the update would raise it. A plain clamp would freeze those elements.
struct LowerBoundFn : torch::autograd::Function<LowerBoundFn> {
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& x, double bound) {
    ctx->save_for_backward({x});
    ctx->saved_data["bound"] = bound;
    return x.clamp_min(bound);
  }

  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grad) {
    const auto x = ctx->get_saved_variables()[0];
    const double bound = ctx->saved_data["bound"].toDouble();
    const auto pass = (x >= bound).logical_or(grad[0] < 0);
    return {grad[0] * pass.to(grad[0].scalar_type()), torch::Tensor()};
  }
};

// ln p of the unit bin around q, floored at ln(kProbabilityFloor).
torch::Tensor laplace_log_likelihood(const torch::Tensor& q, const LaplaceParams& params) {
  auto b = lower_bound(params.scale, kScaleMin);
  auto d = (q - params.mu).abs();
  const auto tail = d >= 0.5;
  // Off-centre bins: 0.5 exp((0.5 - d) / b) (1 - exp(-1 / b)), kept in the
  // log domain so far-off symbols still get a gradient.
  auto dt = torch::where(tail, d, torch::full_like(d, 0.5));
  auto log_tail = std::log(0.5) + (0.5 - dt) / b + torch::log(-torch::expm1(-1.0 / b));
  // Centre bin: 1 - 0.5 exp(-(0.5 - d) / b) - 0.5 exp(-(0.5 + d) / b).
  auto dc = torch::where(tail, torch::zeros_like(d), d);
  auto log_centre = torch::log(-0.5 * torch::expm1(-(0.5 - dc) / b) - 0.5 * torch::expm1(-(0.5 + dc) / b));
  return lower_bound(torch::where(tail, log_tail, log_centre), std::log(kProbabilityFloor));
}

}  // namespace

torch::Tensor lower_bound(const torch::Tensor& x, double bound) { return LowerBoundFn::apply(x, bound); }

torch::Tensor laplace_likelihood(const torch::Tensor& q, const LaplaceParams& params) {
  return torch::exp(laplace_log_likelihood(q, params));
}

torch::Tensor laplace_bits_tensor(const torch::Tensor& q, const LaplaceParams& params) {
  if (q.numel() == 0) return torch::zeros({}, q.options());
  return laplace_log_likelihood(q, params).sum() * (-1.0 / std::log(2.0));
}

BitEstimate laplace_bits(const torch::Tensor& q, const LaplaceParams& params) {
  if (q.numel() == 0) return {};
  torch::NoGradGuard no_grad;
  auto to64 = [](const torch::Tensor& t) { return t.detach().to(torch::kFloat64); };
  LaplaceParams p64{to64(params.mu), to64(params.scale)};
  return {laplace_bits_tensor(to64(q), p64).item<double>()};
}

namespace {

std::vector<float> flat_floats(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat32).contiguous().view(-1);
  return {c.data_ptr<float>(), c.data_ptr<float>() + c.numel()};
}

void check_params(const torch::Tensor& q, const LaplaceParams& params) {
  if (params.mu.sizes() != params.scale.sizes() || (q.defined() && q.sizes() != params.mu.sizes())) {
    throw ShapeError("latent and entropy parameter shapes differ");
  }
}

}  // namespace

Bytes encode_latent(const torch::Tensor& q, const LaplaceParams& params) {
  check_params(q, params);
  auto ints = q.detach().to(torch::kFloat64).round().to(torch::kInt32).contiguous().view(-1);
  std::span<const int32_t> symbols(ints.data_ptr<int32_t>(), static_cast<size_t>(ints.numel()));
  auto mu = flat_floats(params.mu);
  auto scale = flat_floats(params.scale);
  return laplace_encode(symbols, mu, scale);
}

torch::Tensor decode_latent(std::span<const uint8_t> bytes, const LaplaceParams& params) {
  check_params(torch::Tensor(), params);
  auto mu = flat_floats(params.mu);
  auto scale = flat_floats(params.scale);
  auto symbols = laplace_decode(bytes, mu, scale);
  auto t = torch::from_blob(symbols.data(), {static_cast<int64_t>(symbols.size())}, torch::kInt32)
               .to(torch::kFloat32)
               .view(params.mu.sizes());
  return t.contiguous();
}

BitEstimate estimate_rate(std::span<const CodedLatent> latents) {
  BitEstimate total;
  for (const auto& l : latents) {
    if (!l.q.defined() || l.q.numel() == 0) continue;
    total.bits += laplace_bits(l.q, l.params).bits;
  }
  return total;
}

ParamPredictorImpl::ParamPredictorImpl(int64_t hyper_channels, int64_t prior_channels, int64_t latent_channels)
    : prior_channels_(prior_channels),
      latent_channels_(latent_channels),
      fuse1_(register_module("fuse1", nn::conv(hyper_channels + prior_channels, 2 * latent_channels))),
      fuse2_(register_module("fuse2", nn::conv(2 * latent_channels, 2 * latent_channels))) {}

LaplaceParams ParamPredictorImpl::forward(const torch::Tensor& hyper, const std::optional<torch::Tensor>& prior) {
  torch::Tensor input = hyper;
  if (prior_channels_ > 0) {
    if (!prior) throw ShapeError("entropy parameter predictor needs a temporal prior");
    if (prior->size(2) != hyper.size(2) || prior->size(3) != hyper.size(3)) {
      throw ShapeError("temporal prior and hyper features are not aligned");
    }
    input = torch::cat({hyper, *prior}, 1);
  } else if (prior) {
    throw ShapeError("entropy parameter predictor was built without a temporal prior input");
  }
  auto out = fuse2_(nn::lrelu(fuse1_(input)));
  auto parts = out.chunk(2, 1);
  return {parts[0], lower_bound(torch::softplus(parts[1]), kScaleMin)};
}

HyperDensityImpl::HyperDensityImpl(int64_t channels)
    : log_scale_(register_parameter("log_scale", torch::zeros({channels}))) {}

LaplaceParams HyperDensityImpl::params(at::IntArrayRef shape) {
  if (shape.size() != 4 || shape[1] != log_scale_.size(0)) throw ShapeError("hyper latent channel count mismatch");
  auto b = lower_bound(torch::exp(log_scale_), kScaleMin).view({1, -1, 1, 1}).expand(shape).contiguous();
  return {torch::zeros(shape, b.options()), b};
}

}  // namespace sddc
