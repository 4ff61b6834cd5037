#pragma once

#include <cstdint>
#include <random>

namespace csr {

// Independent deterministic streams derived from one run seed. Each consumer
// owns its stream so toggling one feature never shifts the draws of another.
enum class Stream : std::uint32_t {
    model_init = 1,
    noise_init = 2,
    shuffle = 3,
    augment = 4,
    mixup = 5,
    data = 6,
    corrupt = 7,
    gmm = 8,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

}  // namespace csr
