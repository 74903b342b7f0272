#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hypermot {

// Seedable 64-bit RNG, splittable by stream name. Every source of
// randomness in the project derives its stream from one root seed so
// that runs are reproducible end to end.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Derive an independent stream from (seed, name) via FNV-1a mixing.
    Rng split(std::string_view name) const {
        std::uint64_t h = 14695981039346656037ull;
        for (char c : name) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ull;
        }
        return Rng(seed_ ^ h);
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }

    double normal(double mean, double stddev) {
        std::normal_distribution<double> d(mean, stddev);
        return d(engine_);
    }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(engine_);
    }

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace hypermot
