#include "sddc/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sddc/error.hpp"

namespace sddc {

namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr int kModelBits = 16;
constexpr uint32_t kModelTotal = 1u << kModelBits;
constexpr int64_t kMaxRadius = 1024;
// ln(2^17): tail mass beyond the table stays below 2^-17.
constexpr double kTailLog = 11.78350206951907;
constexpr uint32_t kSentinel = 0xA5C3;
constexpr double kScaleFloor = 0.01;

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t temp = cache_;
    do {
      // The very first byte is always zero (the coded interval never
      // exceeds [0, 1)), so it is not stored.
      if (first_byte_) {
        first_byte_ = false;
      } else {
        out_.push_back(static_cast<uint8_t>(temp + carry));
      }
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum_freq, uint32_t freq, int total_bits) {
  const uint32_t r = range_ >> total_bits;
  low_ += static_cast<uint64_t>(r) * cum_freq;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_bits(uint32_t value, int nbits) {
  if (nbits <= 0) return;
  encode(value & ((1u << nbits) - 1), 1, nbits);
}

Bytes RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

// ---------------------------------------------------------------------------
// Decoder

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ < in_.size()) return in_[pos_++];
  ++overrun_;
  return 0;
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::peek(int total_bits) {
  step_ = range_ >> total_bits;
  const uint32_t v = code_ / step_;
  const uint32_t max = (1u << total_bits) - 1;
  return std::min(v, max);
}

void RangeDecoder::consume(uint32_t cum_freq, uint32_t freq) {
  code_ -= step_ * cum_freq;
  range_ = step_ * freq;
  normalize();
}

bool RangeDecoder::clean_end() const {
  if (code_ != 0) return false;
  return std::all_of(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.end(), [](uint8_t b) { return b == 0; });
}

uint32_t RangeDecoder::decode_bits(int nbits) {
  if (nbits <= 0) return 0;
  const uint32_t v = peek(nbits);
  consume(v, 1);
  return v;
}

// ---------------------------------------------------------------------------
// Discretized Laplace model

namespace {

double laplace_cdf(double x, double mu, double b) {
  const double t = (x - mu) / b;
  return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
}

// Frequency table over symbols [lo, lo + freq.size() - 1) plus a trailing
// escape entry for everything outside that window.
struct SymbolTable {
  int64_t lo = 0;
  std::vector<uint32_t> freq;
  std::vector<uint32_t> cum;  // cum[i] = sum of freq[0..i)

  int64_t hi() const { return lo + static_cast<int64_t>(freq.size()) - 2; }
  size_t escape() const { return freq.size() - 1; }
};

SymbolTable build_table(float mu_f, float scale_f) {
  double mu = std::isfinite(mu_f) ? static_cast<double>(mu_f) : 0.0;
  mu = std::clamp(mu, -1e6, 1e6);
  double b = std::isfinite(scale_f) ? static_cast<double>(scale_f) : kScaleFloor;
  b = std::max(b, kScaleFloor);

  const auto center = static_cast<int64_t>(std::nearbyint(mu));
  const int64_t radius = std::clamp<int64_t>(static_cast<int64_t>(std::ceil(b * kTailLog)) + 1, 1, kMaxRadius);
  const int64_t n = 2 * radius + 1;

  SymbolTable t;
  t.lo = center - radius;
  t.freq.resize(static_cast<size_t>(n + 1));
  t.cum.resize(static_cast<size_t>(n + 2));

  const uint32_t budget = kModelTotal - static_cast<uint32_t>(n + 1);
  double prev = laplace_cdf(static_cast<double>(t.lo) - 0.5, mu, b);
  const double below = prev;
  uint32_t sum = 0;
  size_t best = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double next = laplace_cdf(static_cast<double>(t.lo + i) + 0.5, mu, b);
    const double p = std::max(0.0, next - prev);
    prev = next;
    const auto f = 1u + static_cast<uint32_t>(std::floor(p * budget));
    t.freq[static_cast<size_t>(i)] = f;
    if (f > t.freq[best]) best = static_cast<size_t>(i);
    sum += f;
  }
  const double escape_p = std::max(0.0, below + (1.0 - prev));
  t.freq[static_cast<size_t>(n)] = 1u + static_cast<uint32_t>(std::floor(escape_p * budget));
  sum += t.freq[static_cast<size_t>(n)];
  t.freq[best] += kModelTotal - sum;

  t.cum[0] = 0;
  for (size_t i = 0; i < t.freq.size(); ++i) t.cum[i + 1] = t.cum[i] + t.freq[i];
  return t;
}

// Values outside the table: direction bit, then d = distance - 1 coded as
// Exp-Golomb with a 5-bit exponent.
void encode_escape(RangeEncoder& enc, const SymbolTable& t, int64_t v) {
  const bool above = v > t.hi();
  const auto d = static_cast<uint64_t>(above ? v - t.hi() - 1 : t.lo - 1 - v);
  enc.encode_bits(above ? 1u : 0u, 1);
  const uint64_t m = d + 1;
  int k = 0;
  while ((m >> (k + 1)) != 0) ++k;
  enc.encode_bits(static_cast<uint32_t>(k), 5);
  uint64_t rest = m - (uint64_t{1} << k);
  for (int bits = k; bits > 0;) {
    const int chunk = std::min(bits, 16);
    bits -= chunk;
    enc.encode_bits(static_cast<uint32_t>((rest >> bits) & ((1u << chunk) - 1)), chunk);
  }
}

int64_t decode_escape(RangeDecoder& dec, const SymbolTable& t) {
  const bool above = dec.decode_bits(1) != 0;
  const int k = static_cast<int>(dec.decode_bits(5));
  uint64_t rest = 0;
  for (int bits = k; bits > 0;) {
    const int chunk = std::min(bits, 16);
    bits -= chunk;
    rest = (rest << chunk) | dec.decode_bits(chunk);
  }
  const auto d = static_cast<int64_t>((uint64_t{1} << k) + rest - 1);
  return above ? t.hi() + 1 + d : t.lo - 1 - d;
}

void check_sizes(size_t symbols, size_t mu, size_t scale) {
  if (symbols != mu || symbols != scale) {
    throw ShapeError("entropy coder: symbol count " + std::to_string(symbols) + " does not match parameter counts " +
                     std::to_string(mu) + "/" + std::to_string(scale));
  }
}

}  // namespace

Bytes laplace_encode(std::span<const int32_t> symbols, std::span<const float> mu, std::span<const float> scale) {
  check_sizes(symbols.size(), mu.size(), scale.size());
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const auto t = build_table(mu[i], scale[i]);
    const int64_t v = symbols[i];
    if (v >= t.lo && v <= t.hi()) {
      const auto k = static_cast<size_t>(v - t.lo);
      enc.encode(t.cum[k], t.freq[k], kModelBits);
    } else {
      const size_t e = t.escape();
      enc.encode(t.cum[e], t.freq[e], kModelBits);
      encode_escape(enc, t, v);
    }
  }
  enc.encode_bits(kSentinel, 16);
  return enc.finish();
}

std::vector<int32_t> laplace_decode(std::span<const uint8_t> bytes, std::span<const float> mu,
                                    std::span<const float> scale) {
  check_sizes(mu.size(), mu.size(), scale.size());
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(mu.size());
  for (size_t i = 0; i < mu.size(); ++i) {
    const auto t = build_table(mu[i], scale[i]);
    const uint32_t target = dec.peek(kModelBits);
    const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), target);
    const auto k = static_cast<size_t>(std::distance(t.cum.begin(), it)) - 1;
    dec.consume(t.cum[k], t.freq[k]);
    int64_t v = k == t.escape() ? decode_escape(dec, t) : t.lo + static_cast<int64_t>(k);
    if (v < std::numeric_limits<int32_t>::min() || v > std::numeric_limits<int32_t>::max()) {
      throw BitstreamError("entropy decoder produced an out-of-range symbol");
    }
    out[i] = static_cast<int32_t>(v);
  }
  if (dec.decode_bits(16) != kSentinel || dec.overrun() != 0 || !dec.clean_end()) {
    throw BitstreamError("entropy decoder sentinel mismatch (corrupt stream or mismatched parameters)");
  }
  return out;
}

}  // namespace sddc
