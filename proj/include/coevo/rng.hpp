#pragma once

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace coevo {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable random source. All randomness in the library flows through an
/// instance of this class; there is no global RNG state.
///
/// Distributions come from Boost.Random so that a seed produces the same
/// stream regardless of the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Child stream keyed by (seed, stream_id); does not advance this stream.
    Rng split(std::uint64_t stream_id) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL)));
    }

    double uniform() { return boost::random::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) {
        if (!(hi > lo)) return lo;
        return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal() { return normal_(engine_); }

    double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

    /// Uniform integer in [lo, hi].
    std::size_t index(std::size_t lo, std::size_t hi) {
        return boost::random::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
    }

    /// Uniform index in [0, n).
    std::size_t below(std::size_t n) { return index(0, n - 1); }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own index draws (std::shuffle is implementation-defined).
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace coevo
