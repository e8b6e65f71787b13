#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mdm {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Purpose tags keep independent draws made at the same (chain, step) apart.
enum class StreamTag : std::uint32_t {
  Prior = 1,
  StepNoise = 2,
  Training = 3,
  TimeIndex = 4,
  Data = 5,
  Init = 6,
  Decode = 7,
  Oracle = 8,
};

/// Deterministic random stream addressed by (seed, chain, step, tag).
///
/// Every draw is a pure function of the address and the number of draws made
/// so far from the same stream, so the output of a chain never depends on how
/// chains are scheduled across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t chain, std::uint64_t step,
             StreamTag tag = StreamTag::StepNoise);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out);
  std::vector<double> normals(std::size_t n);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  double gamma(double shape);
  double beta(double a, double b);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t chain_;
  std::uint32_t step_;
  std::uint32_t tag_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mdm
