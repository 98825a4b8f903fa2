#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sddc {

using Bytes = std::vector<uint8_t>;

/// 32-bit renormalizing range coder (byte-oriented, carry propagated through
/// a cached byte). Frequencies are integers summing to 2^total_bits with
/// total_bits <= 16.
class RangeEncoder {
 public:
  void encode(uint32_t cum_freq, uint32_t freq, int total_bits);
  /// Equiprobable bits, at most 16 per call.
  void encode_bits(uint32_t value, int nbits);
  Bytes finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool first_byte_ = true;
  Bytes out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  /// Returns the cumulative-frequency target in [0, 2^total_bits); the
  /// caller maps it to a symbol and then calls consume().
  uint32_t peek(int total_bits);
  void consume(uint32_t cum_freq, uint32_t freq);
  uint32_t decode_bits(int nbits);

  /// Bytes read past the end of the input (zeros were substituted).
  size_t overrun() const { return overrun_; }

  /// True when the stream ended exactly where the encoder's flush put it:
  /// the code register is back to zero and no unread byte is nonzero. Any
  /// altered byte breaks this even if every symbol decoded.
  bool clean_end() const;

 private:
  uint8_t next_byte();
  void normalize();

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
  size_t overrun_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
};

/// Codes integer symbols under per-element discretized Laplace models
/// (location `mu`, scale `scale`). A 16-bit sentinel is appended so that
/// decoding with the wrong parameters is detected.
Bytes laplace_encode(std::span<const int32_t> symbols, std::span<const float> mu, std::span<const float> scale);
std::vector<int32_t> laplace_decode(std::span<const uint8_t> bytes, std::span<const float> mu,
                                    std::span<const float> scale);

}  // namespace sddc
