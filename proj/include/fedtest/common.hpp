#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fedtest {

using Scalar = double;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

/// Thrown when a precondition on caller-supplied values is violated.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Derive an independent stream seed from a base seed and a tuple of tags.
/// splitmix64 finalizer applied per tag, so (seed, a, b) and (seed, b, a) differ.
constexpr std::uint64_t derive_seed(std::uint64_t seed) { return seed; }

template <typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull + tag * 0xD1B54A32D192ED03ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return derive_seed(z, static_cast<std::uint64_t>(rest)...);
}

// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
    init = 1,
    train = 2,
    malicious = 3,
    lying = 4,
    testers = 5,
    partition = 6,
    split = 7,
    data = 8,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
    return derive_seed(seed, static_cast<std::uint64_t>(s));
}

template <typename... Tags>
std::uint64_t stream_seed(std::uint64_t seed, Stream s, Tags... tags) {
    return derive_seed(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(tags)...);
}

}  // namespace fedtest
