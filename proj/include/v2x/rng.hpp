#pragma once

#include <array>
#include <cstdint>

namespace v2x::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter counter, Key key);

/// Uniform doubles for one (seed, snapshot, hop) substream. Draws walk the
/// fourth counter word, two 32-bit words per double.
class Substream {
  public:
    Substream(std::uint64_t seed, std::uint64_t snapshot, std::uint32_t hop);

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform();

  private:
    Counter counter_;
    Key key_;
    Counter block_{};
    int used_ = 4;
};

}  // namespace v2x::rng
