#pragma once

#include <array>
#include <cstdint>

namespace subpot {

/// Philox4x32-10 counter-based generator.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

/// Uniform stream for one (seed, path, tag); counter = (block, tag, path_lo, path_hi).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t path, std::uint32_t tag)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        tag_(tag), path_(path) {}

  /// Uniform on (0, 1) with 53-bit resolution.
  double uniform() {
    if (pos_ == 2) refill();
    std::uint64_t hi = buf_[2 * pos_], lo = buf_[2 * pos_ + 1];
    ++pos_;
    std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  void refill() {
    buf_ = philox4x32({block_++, tag_, static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
                      key_);
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t tag_;
  std::uint64_t path_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 2;
};

}  // namespace subpot
