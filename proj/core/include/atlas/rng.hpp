#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace atlas {

// Seeded generator with hand-rolled distributions. The std:: distribution
// classes are implementation-defined, which would make outputs differ between
// standard libraries; everything here is specified bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01();                                   // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::uint64_t uniform_index(std::uint64_t n);         // [0, n)
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // [lo, hi]
    double normal();                                      // N(0, 1), Box-Muller
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    double exponential(double mean);
    bool bernoulli(double p) { return uniform01() < p; }
    std::size_t categorical(const std::vector<double>& weights);

    // k distinct values from [0, n), ascending. Floyd's algorithm.
    std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Independent sub-seed for a named stream (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace atlas
