#include "bcnn/rng.hpp"

#include <cmath>
#include <numbers>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
        word = splitmix64(s);
    }
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    // u1 in (0, 1] keeps the log argument positive.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double stddev) {
    return stddev * normal();
}

int Rng::uniform_int(int lo, int hi) {
    if (lo > hi) {
        throw ParamError("uniform_int: empty range");
    }
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    const std::uint64_t limit = range * (UINT64_MAX / range);
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
        draw = next_u64();
    }
    return lo + static_cast<int>(draw % range);
}

double Rng::uniform_in(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t x = base;
    std::uint64_t mixed = splitmix64(x);
    for (std::uint64_t tag : tags) {
        x ^= tag + 0x9e3779b97f4a7c15ull;
        mixed ^= splitmix64(x);
    }
    return mixed;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t basis) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = basis;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

} // namespace bcnn
