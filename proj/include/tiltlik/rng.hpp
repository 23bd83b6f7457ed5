#pragma once

#include "tiltlik/types.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>

namespace tiltlik {

/// SplitMix64 finalizer, used to turn (key, id) paths into independent keys.
std::uint64_t mix64(std::uint64_t x);

/// Seeded random stream backed by the Philox4x32-10 counter-based generator.
///
/// A stream is identified by a 64-bit key; draws are a pure function of
/// (key, counter). Substreams are derived by hashing the parent key with an
/// id, so results never depend on the order in which streams are consumed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  /// Stream for a path of ids below a root seed, e.g. (seed, replication, i).
  static RandomStream derive(std::uint64_t root, std::initializer_list<std::uint64_t> path);

  RandomStream substream(std::uint64_t id) const;

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Fills every entry with independent standard normals in storage order.
  void fill_normal(double* data, Index count);
  void fill_normal(Matrix& out);
  void fill_normal(RowMatrix& out);

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One Philox4x32-10 block for (counter, key); exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

}  // namespace tiltlik
