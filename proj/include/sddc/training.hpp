#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "sddc/entropy.hpp"
#include "sddc/frames_io.hpp"
#include "sddc/model.hpp"

namespace sddc {

/// The four RD operating points; `lambda_index` elsewhere indexes this.
inline constexpr std::array<double, 4> kLambdas{85.0, 170.0, 380.0, 840.0};

enum class Distortion { mse, one_minus_msssim };

struct RdConfig {
  double lambda = 840.0;
  std::array<double, 4> weights_cycle{0.5, 1.2, 0.5, 0.9};
  int clip_len = 5;  // inter frames per cascaded clip
  Distortion distortion = Distortion::mse;

  void validate() const;
  /// Weight of the inter frame at GOP-relative position `gop_index` (1 for
  /// the first inter frame after an intra frame); periodic with period 4.
  double weight_for(int gop_index) const;
};

// Rate unit: bits per pixel, i.e. rate bits divided by N*H*W of the frame
// batch. The loss of one frame is w * lambda * D + bpp.
struct LossReport {
  torch::Tensor total_tensor;  // differentiable when the inputs are
  double total = 0.0;
  double distortion = 0.0;
  double rate_bits = 0.0;
  double rate_bpp = 0.0;
  std::vector<double> per_frame;  // per-frame totals (cascaded loss only)
};

LossReport rd_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& rate_bits, double weight,
                   const RdConfig& config);
LossReport rd_loss(const torch::Tensor& x, const torch::Tensor& x_hat, BitEstimate rates, double weight,
                   const RdConfig& config);

struct FrameLossInput {
  torch::Tensor x;
  torch::Tensor x_hat;
  torch::Tensor rate_bits;
  int gop_index = 1;
};

/// Mean over the clip of per-frame RD losses, each weighted by
/// weight_for(gop_index). The clip must hold exactly config.clip_len frames.
LossReport cascaded_loss(std::span<const FrameLossInput> clip, const RdConfig& config);

enum class Stage { motion_warmup, single_frame, cascaded };
std::string_view to_string(Stage stage);

struct StageSpec {
  Stage stage = Stage::single_frame;
  int steps = 0;
};

struct StepLog {
  int step = 0;
  Stage stage = Stage::single_frame;
  double loss = 0.0;
  double distortion = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
};

struct TrainConfig {
  RdConfig rd;
  std::vector<StageSpec> stages{{Stage::motion_warmup, 100}, {Stage::single_frame, 400}, {Stage::cascaded, 100}};
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double grad_clip_norm = 1.0;  // 0 disables clipping
  int batch = 1;
  int crop = 64;
  uint64_t seed = 0;
  // false: every step sees the same clip window, crop and quantization
  // noise (useful for overfitting checks and optimizer sanity tests).
  bool vary_samples = true;
  std::filesystem::path checkpoint;  // empty: do not write
  int checkpoint_every = 0;          // 0: only at the end
  std::filesystem::path log_csv;     // empty: no CSV log
  std::function<void(const StepLog&)> on_step;
};

struct TrainSummary {
  std::vector<StepLog> steps;
};

/// Trains `model` in place on random crops of `clips`. Throws TrainingError
/// on an empty dataset or a non-finite loss; checkpoints are only written
/// after finite steps.
TrainSummary train(VideoCodec& model, std::span<const Sequence> clips, const TrainConfig& config);

/// One forward pass of the training objective for `stage` on a clip given
/// as a [T+1, N, 3, H, W] stack (frame 0 is the intra frame). Exposed for
/// tests that inspect gradients.
LossReport training_objective(VideoCodec& model, const torch::Tensor& clip, Stage stage, const RdConfig& rd,
                              std::optional<at::Generator> generator = std::nullopt);

}  // namespace sddc
