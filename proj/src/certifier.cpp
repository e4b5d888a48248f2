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

#include "usdcert/certifier.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "usdcert/error.hpp"
#include "usdcert/parallel.hpp"
#include "usdcert/qudit.hpp"
#include "usdcert/rng.hpp"

namespace usdcert {

CertificationRun CertificationRun::sic_family(int d, std::uint64_t shots, std::uint64_t seed) {
  CertificationRun run{d, d * d, 2, shots, seed};
  run.validate();
  return run;
}

void CertificationRun::validate() const {
  if (d < 2) throw InvalidInput("certification dimension must be >= 2, got " + std::to_string(d));
  if (n < 2) throw InvalidInput("ensemble size must be >= 2, got " + std::to_string(n));
  if (t < 1) throw InvalidInput("order t must be >= 1, got " + std::to_string(t));
}

PairStats PairStats::from_counts(int x1, int x2, const MemberCounts& first, const MemberCounts& second) {
  if (!(x1 >= 1 && x1 < x2)) throw InvalidInput("pair labels must satisfy 1 <= x1 < x2");
  if (first.rounds() == 0 || second.rounds() == 0) {
    throw InvalidInput("pair (" + std::to_string(x1) + "," + std::to_string(x2) +
                       ") has a member with zero rounds");
  }
  PairStats p;
  p.x1 = x1;
  p.x2 = x2;
  p.first_member = first;
  p.second_member = second;
  p.p_usd_hat = 0.5 * (static_cast<double>(first.identify_first) / static_cast<double>(first.rounds()) +
                       static_cast<double>(second.identify_second) / static_cast<double>(second.rounds()));
  return p;
}

PairStats PairStats::exact_value(int x1, int x2, double p_usd) {
  if (!(x1 >= 1 && x1 < x2)) throw InvalidInput("pair labels must satisfy 1 <= x1 < x2");
  if (!(p_usd >= 0.0 && p_usd <= 1.0)) throw InvalidInput("p_usd must lie in [0, 1]");
  PairStats p;
  p.x1 = x1;
  p.x2 = x2;
  p.p_usd_hat = p_usd;
  p.exact = true;
  return p;
}

namespace {

double int_pow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double accumulate_statistic(std::span<const PairStats> pairs, double reference, int t) {
  double sum = 0.0;
  for (const auto& p : pairs) sum += int_pow(reference - p.p_usd_hat, 2 * t);
  return sum;
}

bool all_exact(std::span<const PairStats> pairs) {
  for (const auto& p : pairs) {
    if (!p.exact) return false;
  }
  return true;
}

StStatistic build_statistic(std::span<const PairStats> pairs, double reference, int t,
                            const BootstrapOptions& bootstrap) {
  if (t < 1) throw InvalidInput("order t must be >= 1");
  ensemble_size_from_pairs(pairs);
  StStatistic s;
  s.t = t;
  s.value = accumulate_statistic(pairs, reference, t);
  if (all_exact(pairs)) {
    s.mode = StatMode::kExact;
    return s;
  }
  s.mode = StatMode::kSampled;
  const auto boot = poisson_sigma(pairs, t, reference, bootstrap.resamples, bootstrap.seed);
  s.sigma = boot.sigma;
  s.bootstrap_warning = boot.warning();
  return s;
}

}  // namespace

int ensemble_size_from_pairs(std::span<const PairStats> pairs) {
  // N (N - 1) / 2 = pairs.size()
  const auto m = pairs.size();
  const int n = static_cast<int>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(m))) / 2.0));
  if (m == 0 || static_cast<std::size_t>(n) * (n - 1) / 2 != m) {
    throw InvalidInput("pair list of size " + std::to_string(m) +
                       " cannot cover all unordered pairs of an ensemble");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& p : pairs) {
    if (!(p.x1 >= 1 && p.x1 < p.x2 && p.x2 <= n)) {
      throw InvalidInput("pair (" + std::to_string(p.x1) + "," + std::to_string(p.x2) +
                         ") is outside 1 <= x1 < x2 <= " + std::to_string(n));
    }
    if (!seen.emplace(p.x1, p.x2).second) {
      throw InvalidInput("pair (" + std::to_string(p.x1) + "," + std::to_string(p.x2) + ") appears twice");
    }
  }
  return n;
}

StStatistic s_t(std::span<const PairStats> pairs, int t, const BootstrapOptions& bootstrap) {
  return build_statistic(pairs, 1.0, t, bootstrap);
}

double theoretical_min(int d, std::size_t n, int t) {
  return 0.5 * (welch_bound(d, n, t) - static_cast<double>(n));
}

double alpha_eps(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw DomainError("alpha_eps requires 0 <= epsilon < 1/2, got " + std::to_string(epsilon));
  }
  // Multiplying before the single division keeps alpha_eps(0.1) == 2.25 exactly.
  const double q = 1.0 - 2.0 * epsilon;
  return (1.0 - epsilon) * (1.0 + 2.0 * std::sqrt(epsilon * (1.0 - epsilon))) / (q * q);
}

StStatistic s_eps(std::span<const PairStats> pairs, double epsilon, int t,
                  const BootstrapOptions& bootstrap) {
  return build_statistic(pairs, alpha_eps(epsilon), t, bootstrap);
}

BootstrapResult poisson_sigma(std::span<const PairStats> pairs, int t, int resamples,
                              std::uint64_t seed) {
  return poisson_sigma(pairs, t, 1.0, resamples, seed);
}

BootstrapResult poisson_sigma(std::span<const PairStats> pairs, int t, double reference,
                              int resamples, std::uint64_t seed) {
  if (resamples < 100) throw InvalidInput("bootstrap needs at least 100 resamples");
  if (t < 1) throw InvalidInput("order t must be >= 1");
  BootstrapResult result;
  result.resamples = resamples;
  if (all_exact(pairs)) return result;

  constexpr int kMaxRedraws = 1000;
  const auto count = static_cast<std::size_t>(resamples);
  std::vector<double> values(count);
  std::vector<std::uint64_t> redraws(count, 0);

  parallel_for(count, [&](std::size_t r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    auto draw = [&rng](std::uint64_t mean) -> std::uint64_t {
      if (mean == 0) return 0;
      std::poisson_distribution<std::uint64_t> poisson(static_cast<double>(mean));
      return poisson(rng);
    };
    // Returns the conditional frequency of the `correct` outcome for one member.
    auto resample_member = [&](const MemberCounts& c, bool first_is_correct) {
      for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        const auto f = draw(c.identify_first);
        const auto s = draw(c.identify_second);
        const auto i = draw(c.inconclusive);
        const auto total = f + s + i;
        if (total > 0) {
          return static_cast<double>(first_is_correct ? f : s) / static_cast<double>(total);
        }
        ++redraws[r];
      }
      throw InsufficientStatistics("bootstrap could not draw a nonempty resample");
    };
    double sum = 0.0;
    for (const auto& p : pairs) {
      double p_hat = p.p_usd_hat;
      if (!p.exact) {
        p_hat = 0.5 * (resample_member(p.first_member, true) + resample_member(p.second_member, false));
      }
      sum += int_pow(reference - p_hat, 2 * t);
    }
    values[r] = sum;
  });

  CompensatedSum mean_acc;
  for (double v : values) mean_acc.add(v);
  const double mean = mean_acc.value() / static_cast<double>(count);
  CompensatedSum var_acc;
  for (double v : values) var_acc.add((v - mean) * (v - mean));
  result.sigma = std::sqrt(var_acc.value() / static_cast<double>(count - 1));
  for (auto n : redraws) result.redraws += n;
  return result;
}

Verdict verdict(const StStatistic& statistic, int d, std::size_t n, int t, double k_sigma) {
  if (!(k_sigma > 0.0)) throw InvalidInput("k_sigma must be positive");
  Verdict v;
  v.bound = theoretical_min(d, n, t);
  v.statistic = statistic;
  v.k_sigma = k_sigma;
  const double scale = std::max(statistic.sigma, kSigmaFloor);
  const double diff = statistic.value - v.bound;
  v.z_score = diff / scale;
  v.certified = std::abs(diff) <= k_sigma * scale;
  return v;
}

ResultRecord ResultRecord::from_verdict(const Verdict& v, const CertificationRun& run, bool exact) {
  ResultRecord r;
  r.d = run.d;
  r.n = run.n;
  r.t = run.t;
  r.s_value = v.statistic.value;
  r.sigma = v.statistic.sigma;
  r.bound = v.bound;
  r.z = v.z_score;
  r.certified = v.certified;
  r.seed = run.seed;
  r.shots = exact ? 0 : run.shots;
  return r;
}

void to_json(nlohmann::json& j, const ResultRecord& r) {
  j = nlohmann::json{{"d", r.d},         {"N", r.n},   {"t", r.t},
                     {"S_value", r.s_value}, {"sigma", r.sigma}, {"bound", r.bound},
                     {"z", r.z},         {"certified", r.certified},
                     {"seed", r.seed},   {"shots", r.shots}};
  if (r.epsilon) j["epsilon"] = *r.epsilon;
}

void from_json(const nlohmann::json& j, ResultRecord& r) {
  j.at("d").get_to(r.d);
  j.at("N").get_to(r.n);
  j.at("t").get_to(r.t);
  j.at("S_value").get_to(r.s_value);
  j.at("sigma").get_to(r.sigma);
  j.at("bound").get_to(r.bound);
  j.at("z").get_to(r.z);
  j.at("certified").get_to(r.certified);
  j.at("seed").get_to(r.seed);
  j.at("shots").get_to(r.shots);
  if (j.contains("epsilon") && !j.at("epsilon").is_null()) {
    r.epsilon = j.at("epsilon").get<double>();
  } else {
    r.epsilon.reset();
  }
}

}  // namespace usdcert
