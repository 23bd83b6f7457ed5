#include "tiltlik/rng.hpp"

#include <cmath>

namespace tiltlik {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                           std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

RandomStream RandomStream::derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(root);
  for (auto id : path) key = mix64(key ^ mix64(id + 0x632BE59BD9B4E019ull));
  return RandomStream(key);
}

RandomStream RandomStream::substream(std::uint64_t id) const {
  return RandomStream(mix64(key_ ^ mix64(id + 0x632BE59BD9B4E019ull)));
}

void RandomStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(counter_),
                                            static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(key_),
                                            static_cast<std::uint32_t>(key_ >> 32)};
  block_ = philox4x32_10(ctr, key);
  ++counter_;
  used_ = 0;
}

std::uint64_t RandomStream::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t v =
      (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
  used_ += 2;
  return v;
}

double RandomStream::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

void RandomStream::fill_normal(double* data, Index count) {
  for (Index k = 0; k < count; ++k) data[k] = normal();
}

void RandomStream::fill_normal(Matrix& out) { fill_normal(out.data(), out.size()); }

void RandomStream::fill_normal(RowMatrix& out) { fill_normal(out.data(), out.size()); }

}  // namespace tiltlik
