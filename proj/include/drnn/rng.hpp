#pragma once

#include <cstdint>

namespace drnn {

// Counter-based deterministic generator. Each draw hashes (seed, counter)
// with the splitmix64 finalizer, so identical seeds give identical draw
// sequences on every platform regardless of how many values were cached.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double uniform();

    // standard normal via Box-Muller; the second value of each pair is cached
    double normal();

    // uniform integer in [0, n), n > 0, rejection-sampled (no modulo bias)
    int uniform_int(int n);

    // deterministic sub-stream seed, e.g. per-batch seeds from (base, index)
    static uint64_t derive(uint64_t seed, uint64_t stream);

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace drnn
