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

#ifndef USDCERT_CERTIFIER_HPP
#define USDCERT_CERTIFIER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace usdcert {

/// Parameters of one certification run. For the SIC family N = d^2 and t = 2.
struct CertificationRun {
  int d = 2;
  int n = 4;
  int t = 2;
  std::uint64_t shots = 1000;  ///< rounds per (pair, member)
  std::uint64_t seed = 0;

  static CertificationRun sic_family(int d, std::uint64_t shots, std::uint64_t seed);
  void validate() const;
};

/// Outcome tallies for the rounds in which one member of a pair was sent.
struct MemberCounts {
  std::uint64_t identify_first = 0;
  std::uint64_t identify_second = 0;
  std::uint64_t inconclusive = 0;

  std::uint64_t rounds() const noexcept { return identify_first + identify_second + inconclusive; }
};

/// Per-pair discrimination statistics; buttons are labelled 1..N and x1 < x2.
struct PairStats {
  int x1 = 1;
  int x2 = 2;
  MemberCounts first_member;   ///< rounds where psi_{x1} was sent
  MemberCounts second_member;  ///< rounds where psi_{x2} was sent
  double p_usd_hat = 0.0;
  bool exact = false;  ///< true when p_usd_hat is a probability, not a frequency

  /// p_usd_hat = 1/2 (first|member1 / rounds1 + second|member2 / rounds2).
  static PairStats from_counts(int x1, int x2, const MemberCounts& first, const MemberCounts& second);
  static PairStats exact_value(int x1, int x2, double p_usd);
};

enum class StatMode { kExact, kSampled };

struct StStatistic {
  double value = 0.0;
  double sigma = 0.0;
  int t = 1;
  StatMode mode = StatMode::kExact;
  bool bootstrap_warning = false;  ///< more than 1% of bootstrap draws had to be redrawn
};

struct BootstrapOptions {
  int resamples = 1000;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  double sigma = 0.0;
  int resamples = 0;
  std::uint64_t redraws = 0;

  bool warning() const noexcept { return redraws * 100 > static_cast<std::uint64_t>(resamples); }
};

/// Number of buttons N implied by a complete pair list; throws if the list is
/// not exactly one entry per unordered pair of {1..N}.
int ensemble_size_from_pairs(std::span<const PairStats> pairs);

/// S_t = sum_{x1<x2} (1 - p_usd)^{2t}. Sampled inputs also get a bootstrap sigma.
StStatistic s_t(std::span<const PairStats> pairs, int t, const BootstrapOptions& bootstrap = {});

/// 1/2 (N^2 t! (d-1)! / (t+d-1)! - N).
double theoretical_min(int d, std::size_t n, int t);

/// (1-e) / (1-2e)^2 * (1 + 2 sqrt(e (1-e))), defined for 0 <= e < 1/2.
double alpha_eps(double epsilon);

/// S_eps = sum_{x1<x2} (alpha_eps - p_usd)^{2t}. Equal to s_t at epsilon = 0.
StStatistic s_eps(std::span<const PairStats> pairs, double epsilon, int t,
                  const BootstrapOptions& bootstrap = {});

/// Standard deviation of S_t over parametric bootstrap resamples in which
/// every raw count is replaced by a Poisson draw with that count as its mean.
BootstrapResult poisson_sigma(std::span<const PairStats> pairs, int t, int resamples,
                              std::uint64_t seed);

/// Same, for the statistic sum (reference - p_usd)^{2t}.
BootstrapResult poisson_sigma(std::span<const PairStats> pairs, int t, double reference,
                              int resamples, std::uint64_t seed);

inline constexpr double kDefaultKSigma = 3.0;
inline constexpr double kSigmaFloor = 1e-9;

struct Verdict {
  double bound = 0.0;
  StStatistic statistic;
  double z_score = 0.0;
  bool certified = false;
  double k_sigma = kDefaultKSigma;
};

/// certified iff |value - theoretical_min| <= k_sigma * max(sigma, 1e-9).
Verdict verdict(const StStatistic& statistic, int d, std::size_t n, int t,
                double k_sigma = kDefaultKSigma);

/// Flat record emitted by the command-line tools.
struct ResultRecord {
  int d = 0;
  int n = 0;
  int t = 0;
  double s_value = 0.0;
  double sigma = 0.0;
  double bound = 0.0;
  double z = 0.0;
  bool certified = false;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;  ///< 0 in exact mode

  static ResultRecord from_verdict(const Verdict& v, const CertificationRun& run, bool exact);
};

void to_json(nlohmann::json& j, const ResultRecord& r);
void from_json(const nlohmann::json& j, ResultRecord& r);

}  // namespace usdcert

#endif  // USDCERT_CERTIFIER_HPP
