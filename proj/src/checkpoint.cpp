#include "sddc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "sddc/error.hpp"

namespace sddc {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'S', 'D', 'D', 'C', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw FormatError(path.string() + ": truncated checkpoint");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return static_cast<T>(v);
}

std::map<std::string, torch::Tensor> named_state(VideoCodec& model) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : model->named_parameters()) out[p.key()] = p.value();
  for (const auto& b : model->named_buffers()) out[b.key()] = b.value();
  return out;
}

}  // namespace

void save_checkpoint(const fs::path& path, VideoCodec& model, nlohmann::json metadata) {
  metadata["model"] = model->config().to_json();
  const std::string meta = metadata.dump();
  const auto state = named_state(model);

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    put<uint32_t>(out, kCheckpointVersion);
    put<uint32_t>(out, static_cast<uint32_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<uint32_t>(out, static_cast<uint32_t>(state.size()));
    for (const auto& [name, tensor] : state) {
      auto t = tensor.detach().to(torch::kFloat32).contiguous();
      put<uint16_t>(out, static_cast<uint16_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<uint8_t>(out, 0);
      put<uint8_t>(out, static_cast<uint8_t>(t.dim()));
      for (auto d : t.sizes()) put<int64_t>(out, d);
      const uint64_t nbytes = static_cast<uint64_t>(t.numel()) * sizeof(float);
      put<uint64_t>(out, nbytes);
      // float32 payload stored little-endian; this host is little-endian.
      out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(nbytes));
    }
    if (!out) throw Error("write failed for checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get<uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto meta_len = get<uint32_t>(in, path);
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), meta_len)) throw FormatError(path.string() + ": truncated metadata");

  LoadedCheckpoint out;
  out.metadata = nlohmann::json::parse(meta);
  out.model = VideoCodec(ModelConfig::from_json(out.metadata.value("model", nlohmann::json::object())));
  auto state = named_state(out.model);

  const auto count = get<uint32_t>(in, path);
  torch::NoGradGuard no_grad;
  size_t loaded = 0;
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<uint16_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw FormatError(path.string() + ": truncated tensor name");
    if (get<uint8_t>(in, path) != 0) throw FormatError(path.string() + ": unsupported dtype for " + name);
    const auto ndim = get<uint8_t>(in, path);
    std::vector<int64_t> dims(ndim);
    for (auto& d : dims) d = get<int64_t>(in, path);
    const auto nbytes = get<uint64_t>(in, path);
    auto t = torch::empty(dims, torch::kFloat32);
    if (nbytes != static_cast<uint64_t>(t.numel()) * sizeof(float)) {
      throw FormatError(path.string() + ": byte count mismatch for " + name);
    }
    if (!in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(nbytes))) {
      throw FormatError(path.string() + ": truncated data for " + name);
    }
    auto it = state.find(name);
    if (it == state.end()) throw FormatError(path.string() + ": unknown tensor " + name);
    if (it->second.sizes() != t.sizes()) throw FormatError(path.string() + ": shape mismatch for " + name);
    it->second.copy_(t);
    ++loaded;
  }
  if (loaded != state.size()) {
    throw FormatError(path.string() + ": checkpoint holds " + std::to_string(loaded) + " of " +
                      std::to_string(state.size()) + " tensors");
  }
  return out;
}

}  // namespace sddc
