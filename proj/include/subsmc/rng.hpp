#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>

namespace subsmc {

/// Counter-based random stream (Philox4x32-10, Random123-compatible).
///
/// A stream is identified by a 64-bit key (user seed) and a 64-bit stream id;
/// draws walk a 64-bit counter. Distinct (key, id) pairs give independent
/// sequences, and a stream's output depends only on its own draw count, never
/// on scheduling — the property the particle-parallel phases rely on.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t key, std::uint64_t stream_id) {
    key_[0] = static_cast<std::uint32_t>(key);
    key_[1] = static_cast<std::uint32_t>(key >> 32);
    id_lo_ = static_cast<std::uint32_t>(stream_id);
    id_hi_ = static_cast<std::uint32_t>(stream_id >> 32);
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      block_ = philox(counter_, id_lo_, id_hi_, key_);
      ++counter_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  /// Uniform on (0, 1): never returns an exact endpoint (log-safe).
  double uniform_pos01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform integer in [0, n), n >= 1 (Lemire's unbiased method).
  std::uint32_t uniform_int(std::uint32_t n) {
    assert(n >= 1);
    std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * n;
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < n) {
      const std::uint32_t t = (0u - n) % n;
      while (lo < t) {
        m = static_cast<std::uint64_t>(next_u32()) * n;
        lo = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Standard normal (Box-Muller; caches the second deviate of each pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang).
  double gamma(double shape) {
    assert(shape > 0.0);
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos01(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double student_t(double dof) {
    return normal() / std::sqrt(chi_squared(dof) / dof);
  }

  /// Poisson(rate) by Knuth's product method, chunked so the method stays
  /// exact for large rates (Pois(a+b) = Pois(a) + Pois(b)).
  long poisson(double rate) {
    assert(rate >= 0.0);
    long count = 0;
    while (rate > 500.0) {
      count += poisson_knuth(500.0);
      rate -= 500.0;
    }
    return count + poisson_knuth(rate);
  }

 private:
  long poisson_knuth(double rate) {
    const double limit = std::exp(-rate);
    long k = 0;
    double prod = uniform_pos01();
    while (prod > limit) {
      ++k;
      prod *= uniform_pos01();
    }
    return k;
  }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  static std::array<std::uint32_t, 4> philox(std::uint64_t draw_counter,
                                             std::uint32_t id_lo,
                                             std::uint32_t id_hi,
                                             std::array<std::uint32_t, 2> key) {
    std::array<std::uint32_t, 4> c = {static_cast<std::uint32_t>(draw_counter),
                                      static_cast<std::uint32_t>(draw_counter >> 32),
                                      id_lo, id_hi};
    c = round(c, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
      c = round(c, key);
    }
    return c;
  }

  static std::array<std::uint32_t, 4> round(const std::array<std::uint32_t, 4>& c,
                                            const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  friend std::array<std::uint32_t, 4> philox4x32_10(
      const std::array<std::uint32_t, 4>& counter,
      const std::array<std::uint32_t, 2>& key);

  std::array<std::uint32_t, 2> key_{};
  std::uint32_t id_lo_ = 0, id_hi_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
inline std::array<std::uint32_t, 4> philox4x32_10(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  c = RngStream::round(c, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
    c = RngStream::round(c, k);
  }
  return c;
}

/// Execution phases with disjoint substreams per (stage, particle).
enum class RngPhase : std::uint8_t {
  init = 0,
  refresh = 1,
  resample = 2,
  pilot = 3,
  move = 4,
  simulate = 5,
  mcmc = 6,
};

/// Injective (stage, particle, phase) -> stream id packing: 24/32/8 bits.
inline RngStream derive_stream(std::uint64_t root_seed, std::uint32_t stage,
                               std::uint32_t particle, RngPhase phase) {
  assert(stage < (1u << 24));
  const std::uint64_t id = (static_cast<std::uint64_t>(stage) << 40) |
                           (static_cast<std::uint64_t>(particle) << 8) |
                           static_cast<std::uint64_t>(phase);
  return RngStream(root_seed, id);
}

}  // namespace subsmc
