#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ptf {

// Invalid wiring: shape mismatches, missing parameters, bad experiment setup.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Malformed input text; message names the line and the violated rule.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

namespace stream {
// Fixed tags for deriving independent RNG streams from one master seed.
// Keeping streams separate means optional machinery (option module, PPO
// shuffling, evaluation) never perturbs the draws of the base learner.
inline constexpr std::uint64_t kInit = 0x01;
inline constexpr std::uint64_t kEnv = 0x02;
inline constexpr std::uint64_t kAction = 0x03;
inline constexpr std::uint64_t kOption = 0x04;
inline constexpr std::uint64_t kPpo = 0x05;
inline constexpr std::uint64_t kEval = 0x06;
inline constexpr std::uint64_t kDistill = 0x07;
}  // namespace stream

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return Rng(mix64(mix64(seed ^ mix64(tag)) ^ mix64(index ^ 0x5bf0'3635ull)));
}

}  // namespace ptf
