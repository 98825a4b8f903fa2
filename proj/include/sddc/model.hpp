#pragma once

#include <torch/torch.h>

#include <optional>

#include "json.hpp"
#include "sddc/context.hpp"
#include "sddc/flow.hpp"
#include "sddc/frame_codec.hpp"
#include "sddc/motion_codec.hpp"

namespace sddc {

/// Frame dims are padded to a multiple of this before coding.
inline constexpr int64_t kCodecStride = 64;

struct ModelConfig {
  int64_t feature_channels = 48;
  int64_t flow_channels = 32;
  int64_t motion_latent_channels = 64;
  int64_t motion_hyper_channels = 32;
  int64_t frame_latent_channels = 96;
  int64_t frame_hyper_channels = 64;
  int sdd_factor = 2;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Ablation switches.
struct CodingOptions {
  bool detail_branch = true;  // false: detail flow forced to zero
  bool long_term = true;      // false: short-term contexts used as is
};

/// What both encoder and decoder carry from one frame to the next.
struct ReferenceState {
  torch::Tensor frame;    // previous reconstruction, padded [N, 3, H, W]
  torch::Tensor feature;  // propagated reference feature [N, C_f, H, W]
  RecurrentState memory;  // ConvLSTM state before consuming `feature`
};

struct InterContexts {
  ContextSet short_term;
  ContextSet fused;  // equals short_term when long-term fusion is off
  RecurrentState memory;
};

struct InterFrameOutput {
  MotionLatent motion;
  FrameLatent latent;
  FlowField structure_flow;  // decoded flows
  FlowField detail_flow;
  InterContexts contexts;
  Reconstruction recon;
  torch::Tensor motion_bits;  // y + hyper, differentiable
  torch::Tensor frame_bits;
  torch::Tensor warped_prediction;  // SDD motion-compensated prediction of the frame
  ReferenceState next;
};

/// The complete learned inter codec.
class VideoCodecImpl : public torch::nn::Module {
 public:
  explicit VideoCodecImpl(ModelConfig config = {});

  const ModelConfig& config() const { return config_; }

  /// Reference state at a GOP start from the (padded) intra reconstruction.
  ReferenceState start_gop(const torch::Tensor& intra_frame);

  /// Full inter pipeline for one frame: decomposition, structure/detail flow
  /// estimation, joint motion coding, context mining, long-term update and
  /// fusion, contextual coding and reconstruction.
  InterFrameOutput code_inter(const torch::Tensor& frame, const ReferenceState& ref, QuantMode mode,
                              const CodingOptions& options = {},
                              std::optional<at::Generator> generator = std::nullopt);

  // Pieces shared by the encoder and the decoder.
  std::pair<FlowField, FlowField> estimate_motion(const torch::Tensor& frame, const torch::Tensor& ref_frame,
                                                  const CodingOptions& options);
  std::pair<FlowField, FlowField> decode_motion(const torch::Tensor& y_hat, const CodingOptions& options);
  InterContexts build_contexts(const ReferenceState& ref, const FlowField& structure, const FlowField& detail,
                               const CodingOptions& options);

  FlowNet& structure_flow_net() { return flow_structure_; }
  FlowNet& detail_flow_net() { return flow_detail_; }
  MotionCodec& motion_codec() { return motion_; }
  ShortTermMiner& miner() { return miner_; }
  ConvLstm& lstm() { return lstm_; }
  ContextFusion& fusion() { return fusion_; }
  FrameCodec& frame_codec() { return frame_; }
  IntraFeature& intra_feature() { return intra_feature_; }

 private:
  ModelConfig config_;
  FlowNet flow_structure_{nullptr}, flow_detail_{nullptr};
  MotionCodec motion_{nullptr};
  ShortTermMiner miner_{nullptr};
  ConvLstm lstm_{nullptr};
  ContextFusion fusion_{nullptr};
  FrameCodec frame_{nullptr};
  IntraFeature intra_feature_{nullptr};
};
TORCH_MODULE(VideoCodec);

}  // namespace sddc
