#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sddc/range_coder.hpp"

namespace sddc {

// Bitstream container, all multi-byte fields big-endian:
//
//   magic "SDDC" | version u8 | width u16 | height u16 | frame_count u16 |
//   intra_period u8 | lambda_index u8
//
// lambda_index carries the RD point in its low 4 bits and the ablation
// switches in its top bits (bit 7: detail branch off, bit 6: long-term
// fusion off). Then frame_count records of
//
//   type u8 (0 = intra, 1 = inter) | segments, each u32 length + payload
//
// Intra records hold one segment (the intra payload); inter records hold
// four: motion hyper, motion latent, frame hyper, frame latent.
inline constexpr uint8_t kContainerVersion = 1;
inline constexpr size_t kContainerHeaderBytes = 13;

enum class FrameType : uint8_t { intra = 0, inter = 1 };

struct ContainerHeader {
  uint8_t version = kContainerVersion;
  uint16_t width = 0;
  uint16_t height = 0;
  uint8_t intra_period = 32;
  uint8_t lambda_index = 0;  // 0..15
  bool detail_branch = true;
  bool long_term = true;
};

struct FrameRecord {
  FrameType type = FrameType::intra;
  std::vector<Bytes> segments;
};

struct Container {
  ContainerHeader header;
  std::vector<FrameRecord> frames;

  /// Exact serialized size: header + per record (1 + sum(4 + segment)).
  size_t byte_size() const;
};

size_t segment_count(FrameType type);

Bytes serialize(const Container& container);
Container parse_container(std::span<const uint8_t> bytes);

}  // namespace sddc
