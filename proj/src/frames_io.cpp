#include "sddc/frames_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sddc/error.hpp"

namespace sddc {

namespace fs = std::filesystem;

namespace {

constexpr double kKr = 0.2126;
constexpr double kKb = 0.0722;
constexpr double kKg = 1.0 - kKr - kKb;
constexpr double kChromaZero = 128.0 / 255.0;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

torch::Tensor from_interleaved_rgb8(const std::vector<uint8_t>& buf, int64_t h, int64_t w) {
  auto t = torch::from_blob(const_cast<uint8_t*>(buf.data()), {h, w, 3}, torch::kUInt8);
  return t.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
}

std::vector<uint8_t> to_interleaved_rgb8(const torch::Tensor& pixels) {
  auto q = pixels.detach().to(torch::kFloat32).clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8);
  q = q.permute({1, 2, 0}).contiguous();
  return {q.data_ptr<uint8_t>(), q.data_ptr<uint8_t>() + q.numel()};
}

std::vector<uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Frame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return {from_interleaved_rgb8(buf, image.height, image.width), 0};
}

// Binary PPM (P6, maxval 255). Comments are allowed between header tokens.
Frame read_ppm(const fs::path& path) {
  auto bytes = read_file(path);
  size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P6") throw FormatError(path.string() + ": only binary P6 PPM is supported");
  int64_t w = std::stoll(next_token());
  int64_t h = std::stoll(next_token());
  if (next_token() != "255") throw FormatError(path.string() + ": only 8-bit PPM is supported");
  ++pos;  // single whitespace before raster
  const size_t need = static_cast<size_t>(w * h * 3);
  if (bytes.size() < pos + need) {
    throw FormatError(path.string() + ": truncated PPM raster, expected " + std::to_string(need) +
                      " bytes, found " + std::to_string(bytes.size() - pos));
  }
  std::vector<uint8_t> raster(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                              bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return {from_interleaved_rgb8(raster, h, w), 0};
}

void write_ppm(const torch::Tensor& pixels, const fs::path& path) {
  auto raster = to_interleaved_rgb8(pixels);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P6\n" << pixels.size(2) << " " << pixels.size(1) << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void write_png(const torch::Tensor& pixels, const fs::path& path) {
  auto raster = to_interleaved_rgb8(pixels);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(pixels.size(2));
  image.height = static_cast<png_uint_32>(pixels.size(1));
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
  }
}

bool is_image_file(const fs::path& p) {
  auto ext = lower(p.extension().string());
  return ext == ".png" || ext == ".ppm";
}

// Numbered files in a directory, ordered by their numeric stem.
std::vector<fs::path> list_numbered_images(const fs::path& dir) {
  std::vector<std::pair<long long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    auto stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    found.emplace_back(std::stoll(stem), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [n, p] : found) out.push_back(p);
  return out;
}

Sequence read_image_dir(const fs::path& dir, int64_t width, int64_t height, int count) {
  auto files = list_numbered_images(dir);
  if (files.empty()) throw FormatError("no numbered .png/.ppm frames in " + dir.string());
  if (count > 0 && static_cast<size_t>(count) > files.size()) {
    throw FormatError(dir.string() + ": requested " + std::to_string(count) + " frames, directory holds " +
                      std::to_string(files.size()));
  }
  const size_t n = count > 0 ? static_cast<size_t>(count) : files.size();
  Sequence seq;
  seq.source_format = SourceFormat::image_dir;
  for (size_t i = 0; i < n; ++i) {
    Frame f = read_image(files[i]);
    if ((width > 0 && f.width() != width) || (height > 0 && f.height() != height)) {
      throw FormatError(files[i].string() + ": size " + std::to_string(f.width()) + "x" +
                        std::to_string(f.height()) + " does not match requested " + std::to_string(width) +
                        "x" + std::to_string(height));
    }
    if (!seq.frames.empty() && (f.width() != seq.width() || f.height() != seq.height())) {
      throw FormatError(files[i].string() + ": frame size differs from the first frame");
    }
    f.index = static_cast<int>(i);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

int64_t yuv_frame_bytes(int64_t w, int64_t h, SourceFormat format) {
  if (format == SourceFormat::yuv444) return w * h * 3;
  if (w % 2 != 0 || h % 2 != 0) throw FormatError("yuv420 needs even width and height");
  return w * h + 2 * (w / 2) * (h / 2);
}

Sequence read_yuv(const fs::path& path, int64_t width, int64_t height, int count, SourceFormat format) {
  if (width <= 0 || height <= 0) throw FormatError("raw YUV input needs --width and --height");
  const int64_t stride = yuv_frame_bytes(width, height, format);
  auto bytes = read_file(path);
  const int64_t available = static_cast<int64_t>(bytes.size()) / stride;
  const int64_t n = count > 0 ? count : available;
  if (n * stride > static_cast<int64_t>(bytes.size())) {
    throw FormatError(path.string() + ": truncated file, expected " + std::to_string(n * stride) +
                      " bytes for " + std::to_string(n) + " frames, found " + std::to_string(bytes.size()));
  }
  Sequence seq;
  seq.source_format = format;
  for (int64_t i = 0; i < n; ++i) {
    const uint8_t* base = bytes.data() + i * stride;
    auto plane = [&](int64_t offset, int64_t h, int64_t w) {
      return torch::from_blob(const_cast<uint8_t*>(base + offset), {h, w}, torch::kUInt8)
          .to(torch::kFloat32)
          .div(255.0);
    };
    torch::Tensor yuv;
    auto y = plane(0, height, width);
    if (format == SourceFormat::yuv444) {
      yuv = torch::stack({y, plane(width * height, height, width), plane(2 * width * height, height, width)});
    } else {
      const int64_t cw = width / 2, ch = height / 2;
      auto up = [](const torch::Tensor& c) { return c.repeat_interleave(2, 0).repeat_interleave(2, 1); };
      yuv = torch::stack({y, up(plane(width * height, ch, cw)), up(plane(width * height + cw * ch, ch, cw))});
    }
    seq.frames.push_back({yuv_to_rgb(yuv).contiguous(), static_cast<int>(i)});
  }
  return seq;
}

}  // namespace

SourceFormat parse_source_format(std::string_view name) {
  if (name == "yuv420") return SourceFormat::yuv420;
  if (name == "yuv444") return SourceFormat::yuv444;
  if (name == "image_dir" || name == "png" || name == "images") return SourceFormat::image_dir;
  throw FormatError("unsupported format '" + std::string(name) + "' (expected yuv420, yuv444 or image_dir)");
}

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::yuv420: return "yuv420";
    case SourceFormat::yuv444: return "yuv444";
    case SourceFormat::image_dir: return "image_dir";
  }
  return "?";
}

torch::Tensor rgb_to_yuv(const torch::Tensor& rgb) {
  auto r = rgb[0], g = rgb[1], b = rgb[2];
  auto y = r * kKr + g * kKg + b * kKb;
  auto cb = (b - y) / (2.0 * (1.0 - kKb)) + kChromaZero;
  auto cr = (r - y) / (2.0 * (1.0 - kKr)) + kChromaZero;
  return torch::stack({y, cb, cr});
}

torch::Tensor yuv_to_rgb(const torch::Tensor& yuv) {
  auto y = yuv[0];
  auto cb = yuv[1] - kChromaZero;
  auto cr = yuv[2] - kChromaZero;
  auto r = y + cr * (2.0 * (1.0 - kKr));
  auto b = y + cb * (2.0 * (1.0 - kKb));
  auto g = (y - r * kKr - b * kKb) / kKg;
  return torch::stack({r, g, b}).clamp(0.0, 1.0);
}

torch::Tensor quantize_8bit(const torch::Tensor& pixels) {
  return pixels.clamp(0.0, 1.0).mul(255.0).round().div(255.0);
}

Frame read_image(const fs::path& path) {
  auto ext = lower(path.extension().string());
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw FormatError("unsupported image format: " + path.string());
}

void write_image(const torch::Tensor& pixels, const fs::path& path) {
  auto ext = lower(path.extension().string());
  if (ext == ".png") return write_png(pixels, path);
  if (ext == ".ppm") return write_ppm(pixels, path);
  throw FormatError("unsupported image format: " + path.string());
}

Sequence read_sequence(const fs::path& path, int64_t width, int64_t height, int count, SourceFormat format) {
  if (count < 0) throw Error("frame count must be non-negative");
  if (fs::is_directory(path)) return read_image_dir(path, width, height, count);
  if (!fs::exists(path)) throw Error("input does not exist: " + path.string());
  auto ext = lower(path.extension().string());
  if (ext == ".yuv") {
    if (format == SourceFormat::image_dir) format = SourceFormat::yuv420;
    return read_yuv(path, width, height, count, format);
  }
  if (ext == ".png" || ext == ".ppm") {
    Sequence seq;
    seq.frames.push_back(read_image(path));
    return seq;
  }
  throw FormatError("unsupported input format '" + ext + "' for " + path.string());
}

int available_frames(const fs::path& path, int64_t width, int64_t height, SourceFormat format) {
  if (fs::is_directory(path)) return static_cast<int>(list_numbered_images(path).size());
  if (!fs::exists(path)) throw Error("input does not exist: " + path.string());
  auto ext = lower(path.extension().string());
  if (ext == ".yuv") {
    if (width <= 0 || height <= 0) throw FormatError("raw YUV input needs --width and --height");
    if (format == SourceFormat::image_dir) format = SourceFormat::yuv420;
    return static_cast<int>(static_cast<int64_t>(fs::file_size(path)) / yuv_frame_bytes(width, height, format));
  }
  if (ext == ".png" || ext == ".ppm") return 1;
  throw FormatError("unsupported input format '" + ext + "' for " + path.string());
}

void write_sequence(const Sequence& sequence, const fs::path& path, SourceFormat format) {
  if (sequence.empty()) throw Error("refusing to write an empty sequence");
  if (format == SourceFormat::image_dir) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw Error("cannot create " + path.string() + ": " + ec.message());
    for (size_t i = 0; i < sequence.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "%04zu.png", i);
      write_png(sequence.frames[i].pixels, path / name);
    }
    return;
  }
  const int64_t w = sequence.width(), h = sequence.height();
  yuv_frame_bytes(w, h, format);  // validates 4:2:0 geometry
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto emit = [&](const torch::Tensor& plane) {
    auto q = plane.clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).contiguous();
    out.write(reinterpret_cast<const char*>(q.data_ptr<uint8_t>()), q.numel());
  };
  for (const auto& f : sequence.frames) {
    auto yuv = rgb_to_yuv(f.pixels);
    emit(yuv[0]);
    if (format == SourceFormat::yuv444) {
      emit(yuv[1]);
      emit(yuv[2]);
    } else {
      // 2x2 box average for chroma.
      auto chroma = torch::avg_pool2d(yuv.slice(0, 1, 3).unsqueeze(0), 2).squeeze(0);
      emit(chroma[0]);
      emit(chroma[1]);
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

torch::Tensor pad_tensor_to_stride(const torch::Tensor& grid, int64_t stride) {
  if (stride < 1) throw Error("stride must be >= 1");
  const int64_t h = grid.size(-2), w = grid.size(-1);
  const int64_t ph = (h + stride - 1) / stride * stride - h;
  const int64_t pw = (w + stride - 1) / stride * stride - w;
  if (ph == 0 && pw == 0) return grid;
  // Index-based replicate padding works for any rank and for tiny inputs.
  auto rows = torch::arange(h + ph, torch::kLong).clamp_max(h - 1);
  auto cols = torch::arange(w + pw, torch::kLong).clamp_max(w - 1);
  return grid.index_select(-2, rows).index_select(-1, cols).contiguous();
}

std::pair<Frame, PadInfo> pad_to_stride(const Frame& frame, int64_t stride) {
  PadInfo info{frame.height(), frame.width()};
  return {Frame{pad_tensor_to_stride(frame.pixels, stride), frame.index}, info};
}

Frame crop(const Frame& frame, const PadInfo& info) {
  return {frame.pixels.slice(1, 0, info.height).slice(2, 0, info.width).contiguous(), frame.index};
}

}  // namespace sddc
