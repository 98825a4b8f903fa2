#include "sddc/context.hpp"

#include "sddc/error.hpp"
#include "sddc/sdd.hpp"

namespace sddc {

RecurrentState reset_state(int64_t batch, int64_t channels, int64_t height, int64_t width,
                           const torch::TensorOptions& options) {
  return {torch::zeros({batch, channels, height, width}, options),
          torch::zeros({batch, channels, height, width}, options)};
}

void check_context_geometry(const ContextSet& ctx, int64_t channels, int64_t height, int64_t width) {
  auto check = [](const torch::Tensor& t, int64_t c, int64_t h, int64_t w, const char* name) {
    if (!t.defined() || t.dim() != 4 || t.size(1) != c || t.size(2) != h || t.size(3) != w) {
      throw ShapeError(std::string("context ") + name + " has unexpected geometry");
    }
  };
  check(ctx.c0, channels, height, width, "c0");
  check(ctx.c1, 2 * channels, height / 2, width / 2, "c1");
  check(ctx.c2, 4 * channels, height / 4, width / 4, "c2");
}

// ---------------------------------------------------------------------------

ContextBranchImpl::ContextBranchImpl(int64_t c)
    : extract0_(register_module("extract0", nn::conv(c, c))),
      extract1_(register_module("extract1", nn::conv(c, 2 * c, 3, 2))),
      extract2_(register_module("extract2", nn::conv(2 * c, 4 * c, 3, 2))),
      refine2_(register_module("refine2", nn::conv(4 * c, 4 * c))),
      lift2_(register_module("lift2", nn::conv(4 * c, 2 * c, 1))),
      refine1_(register_module("refine1", nn::conv(4 * c, 2 * c))),
      lift1_(register_module("lift1", nn::conv(2 * c, c, 1))),
      refine0_(register_module("refine0", nn::conv(2 * c, c))) {}

ContextSet ContextBranchImpl::forward(const torch::Tensor& feature, const FlowPyramid& flows) {
  auto f0 = extract0_(feature);
  auto f1 = extract1_(nn::lrelu(f0));
  auto f2 = extract2_(nn::lrelu(f1));

  auto w0 = warp(f0, flows.levels.at(0));
  auto w1 = warp(f1, flows.levels.at(1));
  auto w2 = warp(f2, flows.levels.at(2));

  ContextSet out;
  out.c2 = w2 + refine2_(nn::lrelu(w2));
  out.c1 = w1 + refine1_(nn::lrelu(torch::cat({w1, nn::upsample_nearest2x(lift2_(out.c2))}, 1)));
  out.c0 = w0 + refine0_(nn::lrelu(torch::cat({w0, nn::upsample_nearest2x(lift1_(out.c1))}, 1)));
  return out;
}

void ContextBranchImpl::zero_() {
  torch::NoGradGuard no_grad;
  for (auto& p : parameters()) p.zero_();
}

ShortTermMinerImpl::ShortTermMinerImpl(int64_t channels, int sdd_factor)
    : factor_(sdd_factor),
      structure_(register_module("structure", ContextBranch(channels))),
      detail_(register_module("detail", ContextBranch(channels))) {}

ContextSet ShortTermMinerImpl::forward(const torch::Tensor& feature, const FlowField& structure,
                                       const FlowField& detail) {
  if (structure.vectors.sizes() != detail.vectors.sizes() || structure.vectors.size(2) != feature.size(2) ||
      structure.vectors.size(3) != feature.size(3)) {
    throw ShapeError("context mining: flow and feature dims differ");
  }
  auto parts = decompose(feature, factor_);
  auto s = structure_->forward(parts.structure, build_pyramid(structure.vectors, 3));
  auto d = detail_->forward(parts.detail, build_pyramid(detail.vectors, 3));
  return {s.c0 + d.c0, s.c1 + d.c1, s.c2 + d.c2};
}

// ---------------------------------------------------------------------------

ConvLstmImpl::ConvLstmImpl(int64_t channels)
    : channels_(channels), gates_(register_module("gates", nn::conv(2 * channels, 4 * channels))) {}

std::pair<RecurrentState, torch::Tensor> ConvLstmImpl::forward(const RecurrentState& state,
                                                                const torch::Tensor& feature) {
  if (state.h.sizes() != feature.sizes() || state.c.sizes() != feature.sizes()) {
    throw ShapeError("recurrent state and reference feature dims differ");
  }
  auto g = gates_(torch::cat({feature, state.h}, 1)).chunk(4, 1);
  auto input_gate = torch::sigmoid(g[0]);
  auto output_gate = torch::sigmoid(g[1]);
  auto forget_gate = torch::sigmoid(g[2]);
  auto candidate = torch::tanh(g[3]);
  RecurrentState next;
  next.c = forget_gate * state.c + input_gate * candidate;
  next.h = output_gate * torch::tanh(next.c);
  return {next, next.h};
}

// ---------------------------------------------------------------------------

ContextFusionImpl::ContextFusionImpl(int64_t c)
    : extract0_(register_module("extract0", nn::conv(c, c))),
      extract1_(register_module("extract1", nn::conv(c, 2 * c, 3, 2))),
      extract2_(register_module("extract2", nn::conv(2 * c, 4 * c, 3, 2))),
      refine2_(register_module("refine2", nn::conv(4 * c, 4 * c))),
      lift2_(register_module("lift2", nn::conv(4 * c, 2 * c, 1))),
      refine1_(register_module("refine1", nn::conv(4 * c, 2 * c))),
      lift1_(register_module("lift1", nn::conv(2 * c, c, 1))),
      refine0_(register_module("refine0", nn::conv(2 * c, c))),
      out0_(register_module("out0", nn::conv(2 * c, c))),
      out1_(register_module("out1", nn::conv(4 * c, 2 * c))),
      out2_(register_module("out2", nn::conv(8 * c, 4 * c))) {
  nn::zero_(out0_);
  nn::zero_(out1_);
  nn::zero_(out2_);
}

torch::nn::Conv2d& ContextFusionImpl::output_layer(int scale) {
  switch (scale) {
    case 0: return out0_;
    case 1: return out1_;
    default: return out2_;
  }
}

ContextSet ContextFusionImpl::forward(const torch::Tensor& long_term, const ContextSet& short_term) {
  if (long_term.size(2) != short_term.c0.size(2) || long_term.size(3) != short_term.c0.size(3)) {
    throw ShapeError("long-term context and short-term contexts are not aligned");
  }
  auto h0 = extract0_(long_term);
  auto h1 = extract1_(nn::lrelu(h0));
  auto h2 = extract2_(nn::lrelu(h1));
  auto l2 = h2 + refine2_(nn::lrelu(h2));
  auto l1 = h1 + refine1_(nn::lrelu(torch::cat({h1, nn::upsample_nearest2x(lift2_(l2))}, 1)));
  auto l0 = h0 + refine0_(nn::lrelu(torch::cat({h0, nn::upsample_nearest2x(lift1_(l1))}, 1)));
  ContextSet out;
  out.c0 = short_term.c0 + out0_(torch::cat({l0, short_term.c0}, 1));
  out.c1 = short_term.c1 + out1_(torch::cat({l1, short_term.c1}, 1));
  out.c2 = short_term.c2 + out2_(torch::cat({l2, short_term.c2}, 1));
  return out;
}

}  // namespace sddc
