// Copyright 2026 The usdcert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USDCERT_RNG_HPP
#define USDCERT_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace usdcert {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Keyed split of a master seed. Streams derived with different keys are
// statistically independent, and changing one key's stream never perturbs
// another's.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace usdcert

#endif  // USDCERT_RNG_HPP
