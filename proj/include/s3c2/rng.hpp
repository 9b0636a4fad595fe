#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace s3c2 {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used for seed derivation only, never for sampling.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based sub-seed scheme: every stage of a run hashes the master
/// seed with a fixed stage code and its indices, so any stage can be
/// re-run in isolation with the same stream.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t w : words) h = mix64(h ^ w);
    return h;
}

// Stage codes for derive_seed. Documented in the README.
namespace seed_stage {
constexpr std::uint64_t kBlobs = 1;
constexpr std::uint64_t kSplit = 2;
constexpr std::uint64_t kConstraints = 3;
constexpr std::uint64_t kLabNetInit = 4;
constexpr std::uint64_t kLabNetTrain = 5;
constexpr std::uint64_t kCluNetInit = 6;
constexpr std::uint64_t kCluNetTrain = 7;
constexpr std::uint64_t kEvalPairs = 8;
}  // namespace seed_stage

}  // namespace s3c2
