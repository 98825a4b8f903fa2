#include "sddc/session.hpp"

#include <fstream>

#include "sddc/error.hpp"
#include "sddc/metrics.hpp"

namespace sddc {

namespace {

// Integer-valued latent exactly as the decoder reconstructs it.
torch::Tensor canonical(const torch::Tensor& q) {
  return q.to(torch::kInt32).to(torch::kFloat32).contiguous();
}

torch::Tensor batched(const torch::Tensor& chw) { return chw.unsqueeze(0).contiguous(); }

Frame cropped(const torch::Tensor& padded, const PadInfo& pad, int index) {
  return crop(Frame{padded.squeeze(0), index}, pad);
}

std::array<int64_t, 4> latent_shape(int64_t channels, int64_t h, int64_t w, int64_t div) {
  return {1, channels, h / div, w / div};
}

}  // namespace

std::vector<FrameType> frame_schedule(int count, int intra_period) {
  if (intra_period < 1) throw Error("intra period must be >= 1");
  std::vector<FrameType> out;
  for (int i = 0; i < count; ++i) out.push_back(i % intra_period == 0 ? FrameType::intra : FrameType::inter);
  return out;
}

EncodeResult encode_sequence(VideoCodec& model, const Sequence& sequence, const EncoderConfig& config) {
  torch::NoGradGuard no_grad;
  model->eval();
  if (config.lambda_index < 0 || config.lambda_index > 15) throw Error("lambda index must be in 0..15");
  if (config.intra_period < 1 || config.intra_period > 255) throw Error("intra period must be in 1..255");
  const int count = std::min<int>(static_cast<int>(sequence.size()), config.frames);
  if (sequence.width() > 0xFFFF || sequence.height() > 0xFFFF) throw Error("frame too large for the container");

  EncodeResult result;
  auto& header = result.container.header;
  header.width = static_cast<uint16_t>(sequence.width());
  header.height = static_cast<uint16_t>(sequence.height());
  header.intra_period = static_cast<uint8_t>(config.intra_period);
  header.lambda_index = static_cast<uint8_t>(config.lambda_index);
  header.detail_branch = config.options.detail_branch;
  header.long_term = config.options.long_term;
  result.reconstructions.frame_rate = sequence.frame_rate;
  result.reconstructions.source_format = sequence.source_format;

  auto& motion = model->motion_codec();
  auto& frame_codec = model->frame_codec();
  const auto schedule = frame_schedule(count, config.intra_period);
  std::optional<ReferenceState> ref;

  for (int i = 0; i < count; ++i) {
    const Frame& src = sequence.frames[static_cast<size_t>(i)];
    auto [padded, pad] = pad_to_stride(src, kCodecStride);
    FrameRecord record;
    record.type = schedule[static_cast<size_t>(i)];
    torch::Tensor recon_padded;

    if (record.type == FrameType::intra) {
      record.segments.push_back(intra_encode(src));
      Frame decoded = intra_decode(record.segments.front());
      recon_padded = batched(pad_to_stride(decoded, kCodecStride).first.pixels);
      ref = model->start_gop(recon_padded);
    } else {
      auto x = batched(padded.pixels);
      auto [vs, vd] = model->estimate_motion(x, ref->frame, config.options);
      auto m = motion->encode(vs, vd, QuantMode::infer);
      auto m_hyper = canonical(m.hyper);
      auto m_y = canonical(m.y);
      record.segments.push_back(encode_latent(m_hyper, motion->hyper_params(m_hyper.sizes())));
      record.segments.push_back(encode_latent(m_y, motion->params_from_hyper(m_hyper)));

      auto [vs_hat, vd_hat] = model->decode_motion(m_y, config.options);
      auto ctx = model->build_contexts(*ref, vs_hat, vd_hat, config.options);
      auto y = frame_codec->encode(x, ctx.fused, QuantMode::infer);
      auto y_hyper = canonical(y.hyper);
      auto y_latent = canonical(y.y);
      record.segments.push_back(encode_latent(y_hyper, frame_codec->hyper_params(y_hyper.sizes())));
      record.segments.push_back(encode_latent(y_latent, frame_codec->params_from(y_hyper, ctx.fused)));

      auto recon = frame_codec->decode(y_latent, ctx.fused);
      recon_padded = recon.frame;
      ref = ReferenceState{recon.frame, recon.feature, ctx.memory};
    }

    Frame out = cropped(recon_padded, pad, i);
    FrameReport report;
    report.index = i;
    report.type = record.type;
    report.bytes = 1;
    for (const auto& s : record.segments) report.bytes += 4 + s.size();
    report.bits = 8.0 * static_cast<double>(report.bytes);
    report.psnr = psnr(src.pixels, out.pixels);
    report.msssim = ms_ssim(src.pixels, out.pixels);
    result.frames.push_back(report);
    result.reconstructions.frames.push_back(std::move(out));
    result.container.frames.push_back(std::move(record));
  }

  if (count > 0) {
    const double pixels = static_cast<double>(count) * static_cast<double>(header.width) * header.height;
    result.bpp = 8.0 * static_cast<double>(result.container.byte_size()) / pixels;
    double ps = 0.0, ms = 0.0;
    int finite = 0;
    for (const auto& f : result.frames) {
      if (!is_lossless(f.psnr)) {
        ps += f.psnr;
        ++finite;
      }
      ms += f.msssim;
    }
    result.mean_psnr = finite > 0 ? ps / finite : std::numeric_limits<double>::infinity();
    result.mean_msssim = ms / count;
  }
  return result;
}

Sequence decode_sequence(VideoCodec& model, const Container& container) {
  torch::NoGradGuard no_grad;
  model->eval();
  const auto& header = container.header;
  CodingOptions options{header.detail_branch, header.long_term};
  PadInfo pad{header.height, header.width};
  const int64_t h = (header.height + kCodecStride - 1) / kCodecStride * kCodecStride;
  const int64_t w = (header.width + kCodecStride - 1) / kCodecStride * kCodecStride;
  const auto& mc = model->config();
  auto& motion = model->motion_codec();
  auto& frame_codec = model->frame_codec();

  Sequence out;
  std::optional<ReferenceState> ref;
  for (size_t i = 0; i < container.frames.size(); ++i) {
    const auto& record = container.frames[i];
    if (record.segments.size() != segment_count(record.type)) throw BitstreamError("malformed frame record");
    torch::Tensor recon_padded;
    if (record.type == FrameType::intra) {
      Frame decoded = intra_decode(record.segments[0]);
      if (decoded.width() != header.width || decoded.height() != header.height) {
        throw BitstreamError("intra frame size does not match the container header");
      }
      recon_padded = batched(pad_to_stride(decoded, kCodecStride).first.pixels);
      ref = model->start_gop(recon_padded);
    } else {
      if (!ref) throw BitstreamError("inter frame without a preceding intra frame");
      auto mh_shape = latent_shape(mc.motion_hyper_channels, h, w, 64);
      auto m_hyper = decode_latent(record.segments[0], motion->hyper_params(mh_shape));
      auto my_params = motion->params_from_hyper(m_hyper);
      auto m_y = decode_latent(record.segments[1], my_params);
      auto [vs_hat, vd_hat] = model->decode_motion(m_y, options);
      auto ctx = model->build_contexts(*ref, vs_hat, vd_hat, options);

      auto fh_shape = latent_shape(mc.frame_hyper_channels, h, w, 64);
      auto y_hyper = decode_latent(record.segments[2], frame_codec->hyper_params(fh_shape));
      auto y_latent = decode_latent(record.segments[3], frame_codec->params_from(y_hyper, ctx.fused));
      auto recon = frame_codec->decode(y_latent, ctx.fused);
      recon_padded = recon.frame;
      ref = ReferenceState{recon.frame, recon.feature, ctx.memory};
    }
    out.frames.push_back(cropped(recon_padded, pad, static_cast<int>(i)));
  }
  return out;
}

std::vector<uint8_t> raw_frame_bytes(const Sequence& sequence) {
  std::vector<uint8_t> out;
  for (const auto& f : sequence.frames) {
    auto t = f.pixels.to(torch::kFloat32).contiguous();
    auto p = reinterpret_cast<const uint8_t*>(t.data_ptr<float>());
    out.insert(out.end(), p, p + t.numel() * sizeof(float));
  }
  return out;
}

void write_raw_frames(const Sequence& sequence, const std::filesystem::path& path) {
  auto bytes = raw_frame_bytes(sequence);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace sddc
