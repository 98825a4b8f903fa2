// sddc: command line front end for the codec, training and evaluation.

#include <torch/torch.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "sddc/bd_rate.hpp"
#include "sddc/checkpoint.hpp"
#include "sddc/container.hpp"
#include "sddc/error.hpp"
#include "sddc/frames_io.hpp"
#include "sddc/metrics.hpp"
#include "sddc/rd_plot.hpp"
#include "sddc/sdd.hpp"
#include "sddc/session.hpp"
#include "sddc/training.hpp"

namespace fs = std::filesystem;
using namespace sddc;

namespace {

struct SourceArgs {
  std::string input;
  int64_t width = 0;
  int64_t height = 0;
  std::string format = "yuv420";
};

void add_source_options(CLI::App* cmd, SourceArgs& src, bool required = true) {
  auto* opt = cmd->add_option("--input,-i", src.input, "frame directory, .yuv file or single image");
  if (required) opt->required();
  cmd->add_option("--width", src.width, "frame width (raw YUV input)");
  cmd->add_option("--height", src.height, "frame height (raw YUV input)");
  cmd->add_option("--format", src.format, "raw input layout: yuv420 or yuv444")
      ->check(CLI::IsMember({"yuv420", "yuv444"}));
}

// Reads at most `count` frames (fewer when the input is shorter).
Sequence load_source(const SourceArgs& src, int count) {
  const auto format = parse_source_format(src.format);
  const int n = std::min(count, available_frames(src.input, src.width, src.height, format));
  return read_sequence(src.input, src.width, src.height, n, format);
}

std::vector<uint8_t> read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write failed: " + path.string());
}

VideoCodec load_model(const std::string& path) {
  if (path.empty()) throw Error("a checkpoint is required (--checkpoint)");
  if (!fs::exists(path)) throw Error("checkpoint not found: " + path);
  auto loaded = load_checkpoint(path);
  loaded.model->eval();
  return loaded.model;
}

std::string fmt_psnr(double v) {
  if (is_lossless(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  SourceArgs src;
  std::string checkpoint, out, recon, report;
  int lambda_index = 0;
  int intra_period = 32;
  int frames = 96;
  bool no_detail = false;
  bool no_long_term = false;
};

int run_encode(const EncodeArgs& a) {
  torch::NoGradGuard no_grad;
  auto model = load_model(a.checkpoint);
  auto seq = load_source(a.src, a.frames);
  EncoderConfig cfg;
  cfg.lambda_index = a.lambda_index;
  cfg.intra_period = a.intra_period;
  cfg.frames = a.frames;
  cfg.options.detail_branch = !a.no_detail;
  cfg.options.long_term = !a.no_long_term;
  auto res = encode_sequence(model, seq, cfg);
  write_file(a.out, serialize(res.container));
  if (!a.recon.empty()) write_raw_frames(res.reconstructions, a.recon);

  if (!a.report.empty()) {
    std::ofstream os(a.report);
    if (!os) throw Error("cannot write " + a.report);
    os << "frame,type,bytes,bits,psnr,msssim\n";
    for (const auto& f : res.frames) {
      os << f.index << ',' << (f.type == FrameType::intra ? 'I' : 'P') << ',' << f.bytes << ',' << f.bits << ','
         << fmt_psnr(f.psnr) << ',' << f.msssim << '\n';
    }
  }
  for (const auto& f : res.frames) {
    std::printf("frame %3d %c %8zu bytes  psnr %s dB\n", f.index, f.type == FrameType::intra ? 'I' : 'P', f.bytes,
                fmt_psnr(f.psnr).c_str());
  }
  std::printf("frames %zu  bytes %zu  bpp %.6f  psnr %s dB  ms-ssim %.6f\n", res.frames.size(),
              res.container.byte_size(), res.bpp, fmt_psnr(res.mean_psnr).c_str(), res.mean_msssim);
  return 0;
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string in, out, checkpoint, raw;
};

int run_decode(const DecodeArgs& a) {
  torch::NoGradGuard no_grad;
  const auto bytes = read_file(a.in);
  const auto container = parse_container(bytes);
  auto model = load_model(a.checkpoint);
  auto seq = decode_sequence(model, container);
  if (!a.out.empty()) {
    if (!seq.empty()) {
      write_sequence(seq, a.out, SourceFormat::image_dir);
    } else {
      fs::create_directories(a.out);
    }
  }
  if (!a.raw.empty()) write_raw_frames(seq, a.raw);
  std::printf("decoded %zu frames (%dx%d)\n", seq.size(), container.header.width, container.header.height);
  return 0;
}

// ---------------------------------------------------------------------------

struct BdArgs {
  std::string anchor, test, metric = "psnr";
};

int run_bdrate(const BdArgs& a) {
  const auto anchor = points_of(read_rd_csv(a.anchor));
  const auto test = points_of(read_rd_csv(a.test));
  const double bd = bd_rate(anchor, test, parse_quality_metric(a.metric));
  std::printf("BD-rate (%s): %.3f%%\n", a.metric.c_str(), bd);
  return 0;
}

struct PlotArgs {
  std::vector<std::string> csv;
  std::string out = "rd";
  std::string title = "RD curves";
};

int run_plot(const PlotArgs& a) {
  std::vector<RdCurve> curves;
  for (const auto& path : a.csv) curves.push_back({fs::path(path).stem().string(), read_rd_csv(path)});
  auto res = rd_plot(curves, a.out, a.title);
  std::printf("wrote %s\n", res.csv.c_str());
  if (!res.image.empty()) {
    std::printf("wrote %s\n", res.image.c_str());
  } else {
    std::fprintf(stderr, "warning: %s\n", res.warning.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> data;
  int64_t width = 0, height = 0;
  std::string format = "yuv420";
  int frames = 0;
  std::string init, checkpoint, log;
  int lambda_index = 3;
  int warmup = 100, single = 400, cascaded = 100;
  int clip_len = 5;
  double lr = 1e-4;
  double grad_clip = 1.0;
  int batch = 1, crop = 64;
  uint64_t seed = 0;
  int checkpoint_every = 0;
  bool fixed_sample = false;
  bool msssim = false;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  std::vector<Sequence> clips;
  for (const auto& d : a.data) clips.push_back(read_sequence(d, a.width, a.height, a.frames, parse_source_format(a.format)));

  torch::manual_seed(a.seed);
  VideoCodec model = a.init.empty() ? VideoCodec(ModelConfig{}) : load_checkpoint(a.init).model;

  TrainConfig cfg;
  cfg.rd.lambda = kLambdas.at(static_cast<size_t>(a.lambda_index));
  cfg.rd.clip_len = a.clip_len;
  cfg.rd.distortion = a.msssim ? Distortion::one_minus_msssim : Distortion::mse;
  cfg.stages = {{Stage::motion_warmup, a.warmup}, {Stage::single_frame, a.single}, {Stage::cascaded, a.cascaded}};
  cfg.learning_rate = a.lr;
  cfg.grad_clip_norm = a.grad_clip;
  cfg.batch = a.batch;
  cfg.crop = a.crop;
  cfg.seed = a.seed;
  cfg.vary_samples = !a.fixed_sample;
  cfg.checkpoint = a.checkpoint;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.log_csv = a.log;
  if (!a.quiet) {
    cfg.on_step = [](const StepLog& s) {
      if (s.step % 10 == 0) {
        std::printf("step %5d %-13s loss %.5f  D %.6f  bpp %.4f  psnr %.2f\n", s.step,
                    std::string(to_string(s.stage)).c_str(), s.loss, s.distortion, s.bpp, s.psnr);
        std::fflush(stdout);
      }
    };
  }
  auto summary = train(model, clips, cfg);
  if (!summary.steps.empty()) {
    const auto& last = summary.steps.back();
    std::printf("finished %zu steps, final loss %.5f\n", summary.steps.size(), last.loss);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> checkpoints;
  int64_t width = 0, height = 0;
  std::string format = "yuv420";
  int intra_period = 32, frames = 96;
  std::string out = "rd.csv";
  bool no_detail = false, no_long_term = false;
};

int run_eval(const EvalArgs& a) {
  torch::NoGradGuard no_grad;
  if (a.checkpoints.size() > kLambdas.size()) throw Error("at most one checkpoint per lambda");
  std::vector<RdRow> rows;
  for (size_t li = 0; li < a.checkpoints.size(); ++li) {
    auto model = load_model(a.checkpoints[li]);
    for (const auto& input : a.inputs) {
      auto seq = load_source({input, a.width, a.height, a.format}, a.frames);
      EncoderConfig cfg;
      cfg.lambda_index = static_cast<int>(li);
      cfg.intra_period = a.intra_period;
      cfg.frames = a.frames;
      cfg.options.detail_branch = !a.no_detail;
      cfg.options.long_term = !a.no_long_term;
      auto res = encode_sequence(model, seq, cfg);
      const auto name = fs::path(input).filename().string();
      rows.push_back({name, kLambdas[li], {res.bpp, res.mean_psnr, res.mean_msssim}});
      std::printf("%s lambda %g: bpp %.6f psnr %s ms-ssim %.6f\n", name.c_str(), kLambdas[li], res.bpp,
                  fmt_psnr(res.mean_psnr).c_str(), res.mean_msssim);
    }
  }
  write_rd_csv(a.out, rows);
  return 0;
}

// ---------------------------------------------------------------------------

struct InitArgs {
  std::string out;
  uint64_t seed = 0;
  ModelConfig model;
};

int run_init(const InitArgs& a) {
  torch::manual_seed(a.seed);
  VideoCodec model(a.model);
  save_checkpoint(a.out, model, {{"step", 0}});
  std::printf("wrote untrained checkpoint %s\n", a.out.c_str());
  return 0;
}

// Detail values are shown as 255 - |d| so that flat areas are white.
int run_sdd_dump(const std::string& in, const std::string& out, int factor) {
  auto frame = read_image(in);
  auto [padded, info] = pad_to_stride(frame, factor);
  auto pair = decompose(padded.pixels, factor);
  fs::create_directories(out);
  auto structure = crop(Frame{pair.structure, 0}, info).pixels;
  auto detail = crop(Frame{pair.detail, 0}, info).pixels;
  write_image(structure.clamp(0, 1), fs::path(out) / "structure.png");
  write_image(1.0 - detail.abs().clamp(0, 1), fs::path(out) / "detail.png");
  std::printf("max |x - (s + d)| = %.3g\n", (frame.pixels - structure - detail).abs().max().item<double>());
  return 0;
}

torch::Tensor flow_image(const torch::Tensor& flow) {
  // Magnitude in value, direction split across the red and blue channels.
  auto v = flow[0];
  auto mag = v.pow(2).sum(0).sqrt();
  const double scale = std::max(1e-6, mag.max().item<double>());
  auto u = v[0] / scale, w = v[1] / scale;
  return torch::stack({0.5 + 0.5 * u, 1.0 - mag / scale, 0.5 + 0.5 * w}).clamp(0, 1);
}

torch::Tensor channel_energy(const torch::Tensor& ctx) {
  auto e = ctx[0].abs().mean(0);
  e = e / std::max(1e-6, e.max().item<double>());
  return e.unsqueeze(0).expand({3, -1, -1});
}

int run_context_dump(const SourceArgs& src, const std::string& checkpoint, const std::string& out, int frame_index) {
  torch::NoGradGuard no_grad;
  auto model = load_model(checkpoint);
  auto seq = load_source(src, frame_index + 1);
  if (frame_index < 1 || static_cast<int>(seq.size()) <= frame_index) {
    throw Error("context-dump needs a frame index >= 1 inside the sequence");
  }
  fs::create_directories(out);
  auto prev = pad_tensor_to_stride(quantize_8bit(seq.frames[static_cast<size_t>(frame_index - 1)].pixels), kCodecStride).unsqueeze(0);
  auto cur = pad_tensor_to_stride(seq.frames[static_cast<size_t>(frame_index)].pixels, kCodecStride).unsqueeze(0);
  auto ref = model->start_gop(prev);
  auto res = model->code_inter(cur, ref, QuantMode::infer);
  const fs::path dir(out);
  write_image(flow_image(res.structure_flow.vectors), dir / "flow_structure.png");
  write_image(flow_image(res.detail_flow.vectors), dir / "flow_detail.png");
  write_image(res.warped_prediction[0].clamp(0, 1), dir / "warped.png");
  write_image(res.recon.frame[0], dir / "recon.png");
  const auto& s = res.contexts.short_term;
  const auto& f = res.contexts.fused;
  write_image(channel_energy(s.c0), dir / "context_short_c0.png");
  write_image(channel_energy(s.c1), dir / "context_short_c1.png");
  write_image(channel_energy(s.c2), dir / "context_short_c2.png");
  write_image(channel_energy(f.c0), dir / "context_fused_c0.png");
  write_image(channel_energy(res.contexts.memory.h), dir / "long_term_h.png");
  std::printf("wrote context visualizations to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sddc: learned video codec with structure/detail motion and long-term context"};
  app.require_subcommand(1);
  torch::set_num_threads(std::max(1, static_cast<int>(std::thread::hardware_concurrency())));

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "encode a sequence into an .sddc container");
  add_source_options(c_enc, enc.src);
  c_enc->add_option("--checkpoint,-c", enc.checkpoint, "model checkpoint")->required();
  c_enc->add_option("--lambda-index", enc.lambda_index, "RD point 0..3")->check(CLI::Range(0, 3));
  c_enc->add_option("--intra-period", enc.intra_period, "GOP length")->check(CLI::Range(1, 255));
  c_enc->add_option("--frames", enc.frames, "maximum number of frames to code")->check(CLI::Range(1, 65535));
  c_enc->add_option("--out,-o", enc.out, "output container")->required();
  c_enc->add_flag("--no-detail-branch", enc.no_detail, "force the detail flow to zero");
  c_enc->add_flag("--no-long-term", enc.no_long_term, "skip long-term fusion");
  c_enc->add_option("--recon", enc.recon, "write encoder-side reconstructions as raw float32");
  c_enc->add_option("--report", enc.report, "per-frame CSV report");

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "decode an .sddc container");
  c_dec->add_option("--in", dec.in, "input container")->required();
  c_dec->add_option("--out,-o", dec.out, "output directory for PNG frames");
  c_dec->add_option("--checkpoint,-c", dec.checkpoint, "model checkpoint used by the encoder")->required();
  c_dec->add_option("--raw", dec.raw, "also write reconstructions as raw float32");

  BdArgs bd;
  auto* c_bd = app.add_subcommand("bdrate", "BD-rate of a test RD curve against an anchor");
  c_bd->add_option("--anchor", bd.anchor, "anchor RD CSV")->required();
  c_bd->add_option("--test", bd.test, "test RD CSV")->required();
  c_bd->add_option("--metric", bd.metric, "psnr or msssim")->check(CLI::IsMember({"psnr", "msssim"}));

  PlotArgs plot;
  auto* c_plot = app.add_subcommand("plot", "plot RD curves (CSV always, PNG when matplotlib is available)");
  c_plot->add_option("csv", plot.csv, "RD CSV files, one curve each")->required();
  c_plot->add_option("--out,-o", plot.out, "output stem");
  c_plot->add_option("--title", plot.title, "plot title");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train a model");
  c_tr->add_option("--data", tr.data, "training sequences (frame dirs or .yuv)")->required();
  c_tr->add_option("--width", tr.width);
  c_tr->add_option("--height", tr.height);
  c_tr->add_option("--format", tr.format)->check(CLI::IsMember({"yuv420", "yuv444"}));
  c_tr->add_option("--frames", tr.frames, "frames read per sequence (0: all)");
  c_tr->add_option("--init", tr.init, "start from this checkpoint");
  c_tr->add_option("--checkpoint,-c", tr.checkpoint, "output checkpoint")->required();
  c_tr->add_option("--log", tr.log, "training CSV log");
  c_tr->add_option("--lambda-index", tr.lambda_index)->check(CLI::Range(0, 3));
  c_tr->add_option("--warmup-steps", tr.warmup);
  c_tr->add_option("--single-steps", tr.single);
  c_tr->add_option("--cascaded-steps", tr.cascaded);
  c_tr->add_option("--clip-len", tr.clip_len, "inter frames per cascaded clip")->check(CLI::Range(2, 64));
  c_tr->add_option("--lr", tr.lr);
  c_tr->add_option("--grad-clip", tr.grad_clip, "gradient norm limit (0: off)");
  c_tr->add_option("--batch", tr.batch);
  c_tr->add_option("--crop", tr.crop);
  c_tr->add_option("--seed", tr.seed);
  c_tr->add_option("--checkpoint-every", tr.checkpoint_every);
  c_tr->add_flag("--fixed-sample", tr.fixed_sample, "reuse one sample for every step");
  c_tr->add_flag("--msssim", tr.msssim, "optimize 1 - MS-SSIM instead of MSE");
  c_tr->add_flag("--quiet,-q", tr.quiet);

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "encode sequences at each RD point and write an RD CSV");
  c_ev->add_option("--input,-i", ev.inputs, "sequences")->required();
  c_ev->add_option("--checkpoint,-c", ev.checkpoints, "one checkpoint per lambda index, in order")->required();
  c_ev->add_option("--width", ev.width);
  c_ev->add_option("--height", ev.height);
  c_ev->add_option("--format", ev.format)->check(CLI::IsMember({"yuv420", "yuv444"}));
  c_ev->add_option("--intra-period", ev.intra_period)->check(CLI::Range(1, 255));
  c_ev->add_option("--frames", ev.frames)->check(CLI::Range(1, 65535));
  c_ev->add_option("--out,-o", ev.out, "RD CSV");
  c_ev->add_flag("--no-detail-branch", ev.no_detail);
  c_ev->add_flag("--no-long-term", ev.no_long_term);

  InitArgs in;
  auto* c_init = app.add_subcommand("init", "write an untrained checkpoint");
  c_init->add_option("--out,-o", in.out)->required();
  c_init->add_option("--seed", in.seed);
  c_init->add_option("--feature-channels", in.model.feature_channels);
  c_init->add_option("--flow-channels", in.model.flow_channels);
  c_init->add_option("--motion-latent-channels", in.model.motion_latent_channels);
  c_init->add_option("--frame-latent-channels", in.model.frame_latent_channels);

  std::string sdd_in, sdd_out = "sdd";
  int sdd_factor = 2;
  auto* c_sdd = app.add_subcommand("sdd-dump", "write the structure and detail parts of an image");
  c_sdd->add_option("--in", sdd_in, "PNG or PPM image")->required();
  c_sdd->add_option("--out,-o", sdd_out, "output directory");
  c_sdd->add_option("--factor", sdd_factor)->check(CLI::Range(2, 16));

  SourceArgs ctx_src;
  std::string ctx_ckpt, ctx_out = "contexts";
  int ctx_frame = 1;
  auto* c_ctx = app.add_subcommand("context-dump", "visualize flows and temporal contexts for one inter frame");
  add_source_options(c_ctx, ctx_src);
  c_ctx->add_option("--checkpoint,-c", ctx_ckpt)->required();
  c_ctx->add_option("--frame", ctx_frame, "inter frame index (>= 1)");
  c_ctx->add_option("--out,-o", ctx_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_enc) return run_encode(enc);
    if (*c_dec) return run_decode(dec);
    if (*c_bd) return run_bdrate(bd);
    if (*c_plot) return run_plot(plot);
    if (*c_tr) return run_train(tr);
    if (*c_ev) return run_eval(ev);
    if (*c_init) return run_init(in);
    if (*c_sdd) return run_sdd_dump(sdd_in, sdd_out, sdd_factor);
    if (*c_ctx) return run_context_dump(ctx_src, ctx_ckpt, ctx_out, ctx_frame);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
