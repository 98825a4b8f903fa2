#pragma once

#include <optional>
#include <vector>

#include "sddc/container.hpp"
#include "sddc/frames_io.hpp"
#include "sddc/model.hpp"

namespace sddc {

struct EncoderConfig {
  int lambda_index = 0;
  int intra_period = 32;
  int frames = 96;  // upper bound; shorter sequences are coded in full
  CodingOptions options;
};

struct FrameReport {
  int index = 0;
  FrameType type = FrameType::intra;
  size_t bytes = 0;  // record size including type byte and length prefixes
  double bits = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
};

struct EncodeResult {
  Container container;
  std::vector<FrameReport> frames;
  Sequence reconstructions;  // encoder-side, cropped to the source size
  double bpp = 0.0;          // whole container bits / (frames * W * H)
  double mean_psnr = 0.0;
  double mean_msssim = 0.0;
};

/// Intra at every multiple of `intra_period`, inter elsewhere.
std::vector<FrameType> frame_schedule(int count, int intra_period);

/// Runs the codec over `sequence` and produces a container. Reconstructions
/// are the ones the decoder will produce from the container bytes.
EncodeResult encode_sequence(VideoCodec& model, const Sequence& sequence, const EncoderConfig& config);

/// Decodes using only the container bytes and the model weights.
Sequence decode_sequence(VideoCodec& model, const Container& container);

/// Raw float32 dump of reconstructions (frame after frame, [3, H, W] each),
/// used to compare encoder and decoder outputs bit for bit.
void write_raw_frames(const Sequence& sequence, const std::filesystem::path& path);
std::vector<uint8_t> raw_frame_bytes(const Sequence& sequence);

}  // namespace sddc
