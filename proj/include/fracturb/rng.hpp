#pragma once

// Counter-based random streams. A stream is addressed by (seed, stream index,
// component); its output depends only on that address and on how many values
// have been drawn from it, never on which thread drew them or in what order
// other streams were consumed.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace fracturb {

/// Philox4x32-10 bijection (Salmon et al., SC'11). Used as the block function
/// of an addressed stream.
class Philox4x32 {
  public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr counter_type apply(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Well-known stream components. Coefficient paths use re/im; anything else
/// that needs randomness picks its own tag so streams never collide.
enum class StreamTag : std::uint32_t {
    re = 0,
    im = 1,
    particles = 2,
    ensemble = 3,
};

struct StreamAddress {
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;
    std::uint32_t component = 0;

    StreamAddress() = default;
    StreamAddress(std::uint64_t s, std::uint32_t idx, StreamTag tag)
        : seed(s), stream(idx), component(static_cast<std::uint32_t>(tag)) {}
    StreamAddress(std::uint64_t s, std::uint32_t idx, std::uint32_t comp)
        : seed(s), stream(idx), component(comp) {}
};

/// Uniform random bit generator over one addressed stream. Satisfies
/// std::uniform_random_bit_generator; must not be shared between threads.
class CounterStream {
  public:
    using result_type = std::uint32_t;

    explicit CounterStream(StreamAddress addr) noexcept
        : key_{static_cast<std::uint32_t>(addr.seed), static_cast<std::uint32_t>(addr.seed >> 32)},
          stream_(addr.stream), component_(addr.component) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (lane_ == 4) refill();
        return buffer_[lane_++];
    }

    /// Uniform double in the open interval (0, 1), 53 random bits.
    double uniform_open() noexcept {
        const std::uint64_t hi = (*this)() >> 5;  // 27 bits
        const std::uint64_t lo = (*this)() >> 6;  // 26 bits
        const std::uint64_t bits = (hi << 26) | lo;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is kept for the next call.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t blocks_consumed() const noexcept { return block_; }

  private:
    void refill() noexcept {
        const Philox4x32::counter_type ctr{static_cast<std::uint32_t>(block_),
                                           static_cast<std::uint32_t>(block_ >> 32), stream_, component_};
        buffer_ = Philox4x32::apply(ctr, key_);
        ++block_;
        lane_ = 0;
    }

    Philox4x32::key_type key_;
    std::uint32_t stream_;
    std::uint32_t component_;
    std::uint64_t block_ = 0;
    Philox4x32::counter_type buffer_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent 64-bit seed from a master seed and an index
/// (splitmix64 finalizer). Used for ensemble members.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace fracturb
