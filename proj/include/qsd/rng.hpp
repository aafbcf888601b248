#pragma once

#include <cstdint>
#include <random>

namespace qsd {

/// Per-replication random stream derived from (seed, stream index). The
/// engine and seed_seq are fully specified by the standard, so draws are
/// reproducible across platforms and independent of scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on the open interval (0, 1), 52-bit resolution.
    double uniform()
    {
        const std::uint64_t k = engine_() >> 12;
        return (static_cast<double>(k) + 0.5) * 0x1.0p-52;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace qsd
