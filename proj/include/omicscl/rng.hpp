#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace omicscl {

// Seeded generator. Distributions are implemented here rather than through
// <random> distribution objects so that streams are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Child stream for a named purpose ("split", "init/g", "shuffle", ...).
    Rng derive(std::string_view label) const;

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard normal
    double exponential(double rate);
    std::size_t below(std::size_t n);       // uniform integer in [0, n)

    template <class T>
    void shuffle(std::span<T> v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) noexcept;

}  // namespace omicscl
