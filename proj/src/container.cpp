#include "sddc/container.hpp"

#include <cstring>

#include "sddc/error.hpp"

namespace sddc {

namespace {

constexpr uint8_t kNoDetailBit = 0x80;
constexpr uint8_t kNoLongTermBit = 0x40;

void put_be(Bytes& out, uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}

  uint64_t be(int bytes, const char* what) {
    need(static_cast<size_t>(bytes), what);
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }

  Bytes take(size_t n, const char* what) {
    need(n, what);
    Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }

  size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw BitstreamError(std::string("truncated container while reading ") + what + " (need " + std::to_string(n) +
                           " bytes, " + std::to_string(in_.size() - pos_) + " left)");
    }
  }

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

}  // namespace

size_t segment_count(FrameType type) {
  return type == FrameType::intra ? 1 : 4;
}

size_t Container::byte_size() const {
  size_t n = kContainerHeaderBytes;
  for (const auto& f : frames) {
    n += 1;
    for (const auto& s : f.segments) n += 4 + s.size();
  }
  return n;
}

Bytes serialize(const Container& c) {
  if (c.frames.size() > 0xFFFF) throw Error("too many frames for the container");
  if (c.header.lambda_index > 0x0F) throw Error("lambda index must fit in 4 bits");
  Bytes out;
  out.reserve(c.byte_size());
  out.insert(out.end(), {'S', 'D', 'D', 'C'});
  put_be(out, c.header.version, 1);
  put_be(out, c.header.width, 2);
  put_be(out, c.header.height, 2);
  put_be(out, c.frames.size(), 2);
  put_be(out, c.header.intra_period, 1);
  uint8_t li = c.header.lambda_index;
  if (!c.header.detail_branch) li |= kNoDetailBit;
  if (!c.header.long_term) li |= kNoLongTermBit;
  put_be(out, li, 1);
  for (const auto& f : c.frames) {
    if (f.segments.size() != segment_count(f.type)) throw Error("frame record has the wrong number of segments");
    put_be(out, static_cast<uint8_t>(f.type), 1);
    for (const auto& s : f.segments) {
      put_be(out, s.size(), 4);
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

Container parse_container(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), "SDDC", 4) != 0) throw BitstreamError("not an SDDC container (magic mismatch)");
  Container c;
  c.header.version = static_cast<uint8_t>(r.be(1, "version"));
  if (c.header.version != kContainerVersion) {
    throw BitstreamError("unsupported container version " + std::to_string(c.header.version));
  }
  c.header.width = static_cast<uint16_t>(r.be(2, "width"));
  c.header.height = static_cast<uint16_t>(r.be(2, "height"));
  const auto count = static_cast<size_t>(r.be(2, "frame count"));
  c.header.intra_period = static_cast<uint8_t>(r.be(1, "intra period"));
  const auto li = static_cast<uint8_t>(r.be(1, "lambda index"));
  c.header.lambda_index = li & 0x0F;
  c.header.detail_branch = (li & kNoDetailBit) == 0;
  c.header.long_term = (li & kNoLongTermBit) == 0;
  for (size_t i = 0; i < count; ++i) {
    FrameRecord f;
    const auto type = r.be(1, "frame type");
    if (type > 1) throw BitstreamError("unknown frame type " + std::to_string(type));
    f.type = static_cast<FrameType>(type);
    for (size_t s = 0; s < segment_count(f.type); ++s) {
      const auto len = static_cast<size_t>(r.be(4, "segment length"));
      f.segments.push_back(r.take(len, "segment payload"));
    }
    c.frames.push_back(std::move(f));
  }
  if (r.remaining() != 0) {
    throw BitstreamError("container has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

}  // namespace sddc
