#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dool {

/// Bad user-supplied configuration (unknown key, out-of-range value, ...).
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Runtime numerical failure (blow-up, non-finite gradient, infeasible
/// sampling, ...).  The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A loss graph was asked to do something reverse mode cannot differentiate
/// (non-scalar root, shape mismatch, use of a node from another tape, ...).
class UnsupportedGraphError : public std::logic_error {
public:
    explicit UnsupportedGraphError(const std::string& msg) : std::logic_error(msg) {}
};

/// splitmix64: cheap stateless mixer used to derive independent per-sample
/// RNG substreams from (seed, index) without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Substream seed for sample `index` of a run seeded with `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

} // namespace dool
