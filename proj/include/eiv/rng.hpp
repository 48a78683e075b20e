#pragma once

#include <cmath>
#include <cstdint>

namespace eiv
{

// Small counter-based generator (splitmix64 core). Streams are cheap to
// fork: mix_seed(base, k) yields independent, reproducible substreams, so
// parallel replications stay deterministic regardless of scheduling.
class Rng
{
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64()
    {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]: never 0, so log() below is safe.
    double next_uniform()
    {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double next_normal()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

  private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives the seed of substream k from a base seed (splitmix64 finalizer on
// the combined words). Used for per-replication streams.
inline uint64_t mix_seed(uint64_t base, uint64_t k)
{
    uint64_t z = base + 0x9E3779B97F4A7C15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace eiv
