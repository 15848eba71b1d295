#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace advshift {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxBlock philox4x32(PhiloxBlock counter, PhiloxKey key);

/// Substream namespaces. Each stream is identified by (seed, domain, index) so
/// draws for particle i never depend on how many workers touched particle j.
enum class Domain : std::uint16_t {
    Subspace = 1,
    Fit = 2,
    Particle = 3,
    Response = 4,
    Verify = 5,
};

constexpr std::uint64_t stream_id(Domain domain, std::uint64_t index) {
    return (static_cast<std::uint64_t>(domain) << 48) | (index & 0xFFFFFFFFFFFFull);
}

class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t id);
    Stream(std::uint64_t seed, Domain domain, std::uint64_t index)
        : Stream(seed, stream_id(domain, index)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; pairs are cached.
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

private:
    void refill();

    PhiloxKey key_;
    std::uint64_t id_;
    std::uint64_t block_ = 0;
    PhiloxBlock buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace advshift
