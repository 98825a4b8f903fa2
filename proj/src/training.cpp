#include "sddc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "sddc/checkpoint.hpp"
#include "sddc/error.hpp"
#include "sddc/metrics.hpp"

namespace sddc {

void RdConfig::validate() const {
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  for (double w : weights_cycle) {
    if (!(w > 0.0)) throw Error("hierarchical weights must be positive");
  }
  if (clip_len < 2) throw Error("cascaded clip length must be >= 2");
}

double RdConfig::weight_for(int gop_index) const {
  if (gop_index < 1) throw Error("GOP-relative inter frame index starts at 1");
  return weights_cycle[static_cast<size_t>((gop_index - 1) % 4)];
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::motion_warmup: return "motion_warmup";
    case Stage::single_frame: return "single_frame";
    case Stage::cascaded: return "cascaded";
  }
  return "?";
}

LossReport rd_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& rate_bits, double weight,
                   const RdConfig& config) {
  if (x.sizes() != x_hat.sizes()) throw ShapeError("rd_loss: frame dims differ");
  const int64_t pixels = x.numel() / 3;  // N*H*W for 3-channel frames
  torch::Tensor d = config.distortion == Distortion::mse ? (x - x_hat).pow(2).mean()
                                                         : 1.0 - ms_ssim_tensor(x, x_hat);
  auto bpp = rate_bits / static_cast<double>(pixels);
  LossReport r;
  r.total_tensor = weight * config.lambda * d + bpp;
  r.distortion = d.item<double>();
  r.rate_bits = rate_bits.item<double>();
  r.rate_bpp = r.rate_bits / static_cast<double>(pixels);
  r.total = weight * config.lambda * r.distortion + r.rate_bpp;
  return r;
}

LossReport rd_loss(const torch::Tensor& x, const torch::Tensor& x_hat, BitEstimate rates, double weight,
                   const RdConfig& config) {
  return rd_loss(x, x_hat, torch::tensor(rates.bits, torch::TensorOptions().dtype(torch::kFloat64)), weight,
                 config);
}

LossReport cascaded_loss(std::span<const FrameLossInput> clip, const RdConfig& config) {
  if (static_cast<int>(clip.size()) != config.clip_len) {
    throw Error("cascaded loss expects " + std::to_string(config.clip_len) + " frames, got " +
                std::to_string(clip.size()));
  }
  LossReport out;
  torch::Tensor sum;
  for (const auto& f : clip) {
    auto r = rd_loss(f.x, f.x_hat, f.rate_bits, config.weight_for(f.gop_index), config);
    sum = sum.defined() ? sum + r.total_tensor : r.total_tensor;
    out.distortion += r.distortion;
    out.rate_bits += r.rate_bits;
    out.rate_bpp += r.rate_bpp;
    out.total += r.total;
    out.per_frame.push_back(r.total);
  }
  const double n = static_cast<double>(clip.size());
  out.total_tensor = sum / n;
  out.total /= n;
  out.distortion /= n;
  out.rate_bits /= n;
  out.rate_bpp /= n;
  return out;
}

namespace {

torch::Tensor crop_hw(const torch::Tensor& t, int64_t h, int64_t w) {
  return t.slice(-2, 0, h).slice(-1, 0, w);
}

}  // namespace

LossReport training_objective(VideoCodec& model, const torch::Tensor& clip, Stage stage, const RdConfig& rd,
                              std::optional<at::Generator> generator) {
  if (clip.dim() != 5 || clip.size(0) < 2 || clip.size(2) != 3) {
    throw ShapeError("training clip must be [T+1, N, 3, H, W] with T >= 1");
  }
  const int64_t h = clip.size(3), w = clip.size(4);
  auto padded = pad_tensor_to_stride(clip, kCodecStride);
  const int inter = static_cast<int>(clip.size(0)) - 1;

  ReferenceState ref = model->start_gop(quantize_8bit(padded[0]));
  if (stage == Stage::motion_warmup) {
    auto out = model->code_inter(padded[1], ref, QuantMode::train, {}, generator);
    return rd_loss(clip[1], crop_hw(out.warped_prediction, h, w), out.motion_bits, 1.0, rd);
  }
  if (stage == Stage::single_frame) {
    auto out = model->code_inter(padded[1], ref, QuantMode::train, {}, generator);
    return rd_loss(clip[1], crop_hw(out.recon.frame, h, w), out.motion_bits + out.frame_bits, 1.0, rd);
  }
  std::vector<FrameLossInput> frames;
  for (int t = 1; t <= inter; ++t) {
    auto out = model->code_inter(padded[t], ref, QuantMode::train, {}, generator);
    frames.push_back({clip[t], crop_hw(out.recon.frame, h, w), out.motion_bits + out.frame_bits, t});
    ref = out.next;
  }
  RdConfig cfg = rd;
  cfg.clip_len = inter;
  return cascaded_loss(frames, cfg);
}

namespace {

class ClipSampler {
 public:
  ClipSampler(std::span<const Sequence> clips, int crop, uint64_t seed) : clips_(clips), crop_(crop), rng_(seed) {}

  // [frames, batch, 3, c, c]
  torch::Tensor sample(int frames, int batch) {
    std::vector<size_t> usable;
    for (size_t i = 0; i < clips_.size(); ++i) {
      if (static_cast<int>(clips_[i].size()) >= frames) usable.push_back(i);
    }
    if (usable.empty()) {
      throw TrainingError("no training clip has the " + std::to_string(frames) + " frames this stage needs");
    }
    std::vector<torch::Tensor> items;
    for (int b = 0; b < batch; ++b) {
      const auto& seq = clips_[usable[pick(usable.size())]];
      const size_t start = pick(seq.size() - static_cast<size_t>(frames) + 1);
      const int64_t ch = std::min<int64_t>(crop_, seq.height());
      const int64_t cw = std::min<int64_t>(crop_, seq.width());
      const auto top = static_cast<int64_t>(pick(static_cast<size_t>(seq.height() - ch + 1)));
      const auto left = static_cast<int64_t>(pick(static_cast<size_t>(seq.width() - cw + 1)));
      std::vector<torch::Tensor> window;
      for (int t = 0; t < frames; ++t) {
        window.push_back(seq.frames[start + static_cast<size_t>(t)].pixels.slice(1, top, top + ch).slice(2, left, left + cw));
      }
      items.push_back(torch::stack(window));
    }
    return torch::stack(items, 1).contiguous();
  }

 private:
  size_t pick(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng_); }

  std::span<const Sequence> clips_;
  int crop_;
  std::mt19937_64 rng_;
};

int frames_for(Stage stage, const RdConfig& rd) {
  return stage == Stage::cascaded ? rd.clip_len + 1 : 2;
}

}  // namespace

TrainSummary train(VideoCodec& model, std::span<const Sequence> clips, const TrainConfig& config) {
  config.rd.validate();
  if (clips.empty() || std::all_of(clips.begin(), clips.end(), [](const Sequence& s) { return s.empty(); })) {
    throw TrainingError("training dataset is empty");
  }
  if (config.batch < 1 || config.crop < 1) throw TrainingError("batch and crop must be positive");

  torch::manual_seed(config.seed);
  model->train();
  auto generator = at::make_generator<at::CPUGeneratorImpl>(config.seed);
  torch::optim::AdamW optimizer(model->parameters(),
                                torch::optim::AdamWOptions(config.learning_rate).weight_decay(config.weight_decay));

  std::ofstream log;
  if (!config.log_csv.empty()) {
    log.open(config.log_csv);
    if (!log) throw Error("cannot write training log " + config.log_csv.string());
    log << "step,stage,loss,distortion,bpp,psnr\n";
  }

  TrainSummary summary;
  ClipSampler sampler(clips, config.crop, config.seed);
  std::optional<torch::Tensor> fixed_clip;
  int step = 0;
  for (const auto& spec : config.stages) {
    const int frames = frames_for(spec.stage, config.rd);
    if (!config.vary_samples) fixed_clip.reset();
    for (int i = 0; i < spec.steps; ++i, ++step) {
      torch::Tensor clip;
      if (config.vary_samples) {
        clip = sampler.sample(frames, config.batch);
      } else {
        if (!fixed_clip) fixed_clip = sampler.sample(frames, config.batch);
        clip = *fixed_clip;
        generator.set_current_seed(config.seed);
      }

      optimizer.zero_grad();
      auto report = training_objective(model, clip, spec.stage, config.rd, generator);
      if (!std::isfinite(report.total)) {
        throw TrainingError("non-finite loss at step " + std::to_string(step) + " (stage " +
                            std::string(to_string(spec.stage)) + ", distortion " + std::to_string(report.distortion) +
                            ", rate " + std::to_string(report.rate_bpp) + " bpp); aborting without checkpointing");
      }
      report.total_tensor.backward();
      if (config.grad_clip_norm > 0.0) {
        const double norm = torch::nn::utils::clip_grad_norm_(model->parameters(), config.grad_clip_norm);
        if (!std::isfinite(norm)) {
          throw TrainingError("non-finite gradient at step " + std::to_string(step) + " (stage " +
                              std::string(to_string(spec.stage)) + "); aborting without checkpointing");
        }
      }
      optimizer.step();

      StepLog entry{step, spec.stage, report.total, report.distortion, report.rate_bpp,
                    config.rd.distortion == Distortion::mse && report.distortion > 0
                        ? 10.0 * std::log10(1.0 / report.distortion)
                        : 0.0};
      summary.steps.push_back(entry);
      if (log) {
        log << entry.step << ',' << to_string(entry.stage) << ',' << entry.loss << ',' << entry.distortion << ','
            << entry.bpp << ',' << entry.psnr << '\n';
        log.flush();
      }
      if (config.on_step) config.on_step(entry);
      if (!config.checkpoint.empty() && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
        save_checkpoint(config.checkpoint, model, {{"step", step + 1}, {"lambda", config.rd.lambda}});
      }
    }
  }
  if (!config.checkpoint.empty()) {
    for (const auto& p : model->parameters()) {
      if (!torch::isfinite(p).all().item<bool>()) {
        throw TrainingError("model has non-finite weights after training; checkpoint not written");
      }
    }
    save_checkpoint(config.checkpoint, model, {{"step", step}, {"lambda", config.rd.lambda}});
  }
  model->eval();
  return summary;
}

}  // namespace sddc
