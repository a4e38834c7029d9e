#pragma once

#include <cstdint>

// Tags mixed into the run seed so that every consumer gets its own stream.
namespace pbvf::streams {

inline constexpr std::uint64_t kEnv = 1;
inline constexpr std::uint64_t kPolicyInit = 2;
inline constexpr std::uint64_t kCriticInit = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kSampling = 5;
inline constexpr std::uint64_t kEval = 6;
inline constexpr std::uint64_t kActions = 7;
inline constexpr std::uint64_t kZeroShot = 8;
inline constexpr std::uint64_t kOffline = 9;

}  // namespace pbvf::streams
