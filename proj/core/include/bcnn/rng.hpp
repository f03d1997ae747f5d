#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace bcnn {

/// Deterministic random stream: xoshiro256++ seeded through splitmix64.
///
/// The generator is fixed by name so that a (seed, draw sequence) pair
/// replays identically on every platform. Normal deviates use the basic
/// Box-Muller transform without caching, so each normal() consumes exactly
/// two uniform draws and the stream position after n deviates is the same
/// no matter how they were batched.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal deviate.
    double normal();

    /// Normal deviate with the given standard deviation.
    double normal(double stddev);

    /// Uniform integer in [lo, hi], both bounds inclusive. Rejection
    /// sampled, so the result is exactly uniform.
    int uniform_int(int lo, int hi);

    /// Uniform double in [lo, hi).
    double uniform_in(double lo, double hi);

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::array<std::uint64_t, 4> state_{};
};

/// Stable seed derivation for independent substreams. Mixes the base seed
/// with each tag through the splitmix64 finalizer; distinct tag sequences
/// give unrelated streams (runs, hemispheres, pipeline stages).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// FNV-1a over a byte string; used for deriving seeds from names and for
/// checkpoint spec hashes.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ull);

} // namespace bcnn
