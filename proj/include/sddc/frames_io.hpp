#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace sddc {

enum class SourceFormat { yuv420, yuv444, image_dir };

SourceFormat parse_source_format(std::string_view name);
std::string_view to_string(SourceFormat format);

/// One RGB picture, stored as a contiguous float32 tensor of shape [3, H, W]
/// with samples in [0, 1].
struct Frame {
  torch::Tensor pixels;
  int index = 0;

  int64_t height() const { return pixels.size(1); }
  int64_t width() const { return pixels.size(2); }
};

struct Sequence {
  std::vector<Frame> frames;
  double frame_rate = 30.0;
  SourceFormat source_format = SourceFormat::image_dir;

  bool empty() const { return frames.empty(); }
  size_t size() const { return frames.size(); }
  int64_t height() const { return frames.empty() ? 0 : frames.front().height(); }
  int64_t width() const { return frames.empty() ? 0 : frames.front().width(); }
};

struct PadInfo {
  int64_t height = 0;  // original size, before padding
  int64_t width = 0;
};

/// Reads `count` frames. Directories are read as zero-padded numbered PNG/PPM
/// images (width/height are then taken from the files and checked when
/// nonzero); `.yuv` files need width/height and the chroma layout in
/// `format`. A count of 0 on a directory or a yuv file means "all frames".
Sequence read_sequence(const std::filesystem::path& path, int64_t width, int64_t height,
                       int count, SourceFormat format = SourceFormat::yuv420);

/// Number of frames `read_sequence` can return for this input.
int available_frames(const std::filesystem::path& path, int64_t width, int64_t height,
                     SourceFormat format = SourceFormat::yuv420);

/// Writes planar 8-bit YUV (one file) or a directory of PNG files named
/// 0000.png, 0001.png, ...
void write_sequence(const Sequence& sequence, const std::filesystem::path& path,
                    SourceFormat format);

/// Replicate-pads right/bottom so both dims become multiples of `stride`.
std::pair<Frame, PadInfo> pad_to_stride(const Frame& frame, int64_t stride);
Frame crop(const Frame& frame, const PadInfo& info);

/// Same padding rule applied to the last two dims of any tensor.
torch::Tensor pad_tensor_to_stride(const torch::Tensor& grid, int64_t stride);

// BT.709 full-range conversion on [3, H, W] float tensors. YUV planes are
// normalized to [0, 1] with the chroma zero point at 128/255.
torch::Tensor rgb_to_yuv(const torch::Tensor& rgb);
torch::Tensor yuv_to_rgb(const torch::Tensor& yuv);

/// Rounds to the 8-bit grid: round(255 * x) / 255, clamped to [0, 1].
torch::Tensor quantize_8bit(const torch::Tensor& pixels);

// Single images (8-bit RGB). PNG via libpng, PPM (P6) natively.
Frame read_image(const std::filesystem::path& path);
void write_image(const torch::Tensor& pixels, const std::filesystem::path& path);

}  // namespace sddc
