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

#ifndef USDCERT_FIDUCIAL_HPP
#define USDCERT_FIDUCIAL_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "usdcert/qudit.hpp"

namespace usdcert {

inline constexpr int kMinFiducialDim = 2;
inline constexpr int kMaxFiducialDim = 16;

enum class StepRule {
  kSteepestDescent,  ///< projected gradient, Armijo backtracking
  kLbfgs,            ///< limited-memory BFGS direction, Armijo backtracking
};

struct FiducialSearchConfig {
  int restarts = 20;
  int max_iterations = 5000;
  StepRule step_rule = StepRule::kLbfgs;
  double tolerance = 1e-8;  ///< allowed frame-potential excess over 2d^3/(d+1)
  double gradient_tolerance = 1e-10;

  void validate() const;
};

struct FiducialResult {
  QuditState fiducial;
  DesignReport report;
  int restart = 0;     ///< index of the winning restart
  int iterations = 0;  ///< optimizer iterations spent by the winning restart
};

/// Orbit potential sum_{j,k} |<v|X^j Z^k|v>|^4 / |v|^8. It is invariant under
/// rescaling and global phase; times d^2 it equals the t=2 frame potential of
/// the Weyl-Heisenberg orbit of v.
double orbit_potential(const Amplitudes& v);

/// Real gradient of orbit_potential, packed as d/dRe + i d/dIm per component.
Amplitudes orbit_potential_gradient(const Amplitudes& v);

/// Searches for a Weyl-Heisenberg SIC fiducial by minimizing the orbit
/// potential from random restarts. Throws SearchFailed when no restart gets
/// within config.tolerance. The winner is the lexicographic minimum of
/// (excess, restart index), so the result does not depend on scheduling.
FiducialResult find_sic_fiducial(int dim, const FiducialSearchConfig& config, std::uint64_t seed);

/// Verifies that the orbit of a candidate fiducial is a 2-design.
DesignReport verify_fiducial(const QuditState& fiducial, double tolerance);

// --- Fiducial file -----------------------------------------------------------
// One record per line: `d;re0,im0;re1,im1;...`, every number printed with 17
// significant digits. Blank lines and lines starting with '#' are ignored.

using FiducialTable = std::map<int, QuditState>;

std::string format_fiducial_record(const QuditState& fiducial);
QuditState parse_fiducial_record(std::string_view line);

FiducialTable read_fiducial_file(const std::filesystem::path& path);
void write_fiducial_file(const std::filesystem::path& path, const FiducialTable& table);

/// Loads the record for `dim` and re-verifies it. Returns nullopt when the file
/// has no record for `dim`; throws InvalidInput when the record fails to verify.
std::optional<FiducialResult> load_verified_fiducial(const std::filesystem::path& path, int dim,
                                                     double tolerance = 1e-8);

}  // namespace usdcert

#endif  // USDCERT_FIDUCIAL_HPP
