#include "sddc/model.hpp"

#include "sddc/error.hpp"
#include "sddc/sdd.hpp"

namespace sddc {

nlohmann::json ModelConfig::to_json() const {
  return {{"feature_channels", feature_channels},
          {"flow_channels", flow_channels},
          {"motion_latent_channels", motion_latent_channels},
          {"motion_hyper_channels", motion_hyper_channels},
          {"frame_latent_channels", frame_latent_channels},
          {"frame_hyper_channels", frame_hyper_channels},
          {"sdd_factor", sdd_factor}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.feature_channels = j.value("feature_channels", c.feature_channels);
  c.flow_channels = j.value("flow_channels", c.flow_channels);
  c.motion_latent_channels = j.value("motion_latent_channels", c.motion_latent_channels);
  c.motion_hyper_channels = j.value("motion_hyper_channels", c.motion_hyper_channels);
  c.frame_latent_channels = j.value("frame_latent_channels", c.frame_latent_channels);
  c.frame_hyper_channels = j.value("frame_hyper_channels", c.frame_hyper_channels);
  c.sdd_factor = j.value("sdd_factor", c.sdd_factor);
  return c;
}

VideoCodecImpl::VideoCodecImpl(ModelConfig config) : config_(config) {
  const int64_t cf = config.feature_channels;
  flow_structure_ = register_module("flow_structure", FlowNet(config.flow_channels));
  flow_detail_ = register_module("flow_detail", FlowNet(config.flow_channels));
  motion_ = register_module("motion", MotionCodec(MotionCodecConfig{config.motion_latent_channels,
                                                                    config.motion_hyper_channels}));
  miner_ = register_module("miner", ShortTermMiner(cf, config.sdd_factor));
  lstm_ = register_module("lstm", ConvLstm(cf));
  fusion_ = register_module("fusion", ContextFusion(cf));
  frame_ = register_module("frame", FrameCodec(FrameCodecConfig{cf, config.frame_latent_channels,
                                                                config.frame_hyper_channels}));
  intra_feature_ = register_module("intra_feature", IntraFeature(cf));
}

ReferenceState VideoCodecImpl::start_gop(const torch::Tensor& intra_frame) {
  if (intra_frame.dim() != 4 || intra_frame.size(1) != 3) throw ShapeError("intra frame must be [N, 3, H, W]");
  ReferenceState s;
  s.frame = intra_frame;
  s.feature = intra_feature_(intra_frame);
  s.memory = reset_state(intra_frame.size(0), config_.feature_channels, intra_frame.size(2), intra_frame.size(3),
                         intra_frame.options());
  return s;
}

std::pair<FlowField, FlowField> VideoCodecImpl::estimate_motion(const torch::Tensor& frame,
                                                                const torch::Tensor& ref_frame,
                                                                const CodingOptions& options) {
  auto cur = decompose(frame, config_.sdd_factor);
  auto ref = decompose(ref_frame, config_.sdd_factor);
  auto vs = estimate_flow(cur.structure, ref.structure, flow_structure_, FlowKind::structure);
  FlowField vd{torch::zeros_like(vs.vectors), FlowKind::detail};
  if (options.detail_branch) vd = estimate_flow(cur.detail, ref.detail, flow_detail_, FlowKind::detail);
  return {vs, vd};
}

std::pair<FlowField, FlowField> VideoCodecImpl::decode_motion(const torch::Tensor& y_hat,
                                                              const CodingOptions& options) {
  auto [vs, vd] = motion_->decode(y_hat);
  if (!options.detail_branch) vd.vectors = torch::zeros_like(vd.vectors);
  return {vs, vd};
}

InterContexts VideoCodecImpl::build_contexts(const ReferenceState& ref, const FlowField& structure,
                                             const FlowField& detail, const CodingOptions& options) {
  InterContexts out;
  out.short_term = miner_->forward(ref.feature, structure, detail);
  if (options.long_term) {
    auto [memory, long_term] = lstm_->forward(ref.memory, ref.feature);
    out.memory = memory;
    out.fused = fusion_->forward(long_term, out.short_term);
  } else {
    out.memory = ref.memory;
    out.fused = out.short_term;
  }
  return out;
}

InterFrameOutput VideoCodecImpl::code_inter(const torch::Tensor& frame, const ReferenceState& ref, QuantMode mode,
                                            const CodingOptions& options, std::optional<at::Generator> generator) {
  if (frame.sizes() != ref.frame.sizes()) throw ShapeError("current and reference frames differ in shape");
  InterFrameOutput out;
  auto [vs, vd] = estimate_motion(frame, ref.frame, options);
  out.motion = motion_->encode(vs, vd, mode, generator);
  std::tie(out.structure_flow, out.detail_flow) = decode_motion(out.motion.y, options);
  out.contexts = build_contexts(ref, out.structure_flow, out.detail_flow, options);
  out.latent = frame_->encode(frame, out.contexts.fused, mode, generator);
  out.recon = frame_->decode(out.latent.y, out.contexts.fused);

  out.motion_bits = laplace_bits_tensor(out.motion.y, out.motion.params) +
                    laplace_bits_tensor(out.motion.hyper, out.motion.hyper_params);
  out.frame_bits = laplace_bits_tensor(out.latent.y, out.latent.params) +
                   laplace_bits_tensor(out.latent.hyper, out.latent.hyper_params);

  auto ref_parts = decompose(ref.frame, config_.sdd_factor);
  out.warped_prediction = warp(ref_parts.structure, out.structure_flow.vectors) +
                          warp(ref_parts.detail, out.detail_flow.vectors);
  out.next = {out.recon.frame, out.recon.feature, out.contexts.memory};
  return out;
}

}  // namespace sddc
