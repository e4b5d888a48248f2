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


#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "usdcert/certifier.hpp"
#include "usdcert/error.hpp"
#include "usdcert/fiducial.hpp"
#include "usdcert/harness.hpp"

namespace usdcert {
namespace {

std::vector<PairStats> exact_sic_pairs(int d) {
  if (d == 2) return exact_pair_stats(wh_orbit(testing::qubit_sic_fiducial()));
  const auto loaded = load_verified_fiducial(USDCERT_FIDUCIAL_FILE, d);
  if (loaded) return exact_pair_stats(wh_orbit(loaded->fiducial));
  return exact_pair_stats(wh_orbit(find_sic_fiducial(d, {}, 1).fiducial));
}

/// Multinomial counts for every (pair, member) drawn at the exact SIC probabilities.
std::vector<PairStats> sampled_qubit_sic_pairs(std::uint64_t shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double p = 1.0 - 1.0 / std::sqrt(3.0);
  std::binomial_distribution<std::uint64_t> draw(shots, p);
  std::vector<PairStats> out;
  for (int a = 1; a <= 4; ++a) {
    for (int b = a + 1; b <= 4; ++b) {
      const auto f = draw(rng);
      const auto s = draw(rng);
      out.push_back(PairStats::from_counts(a, b, {f, 0, shots - f}, {0, s, shots - s}));
    }
  }
  return out;
}

std::vector<PairStats> scaled(std::vector<PairStats> pairs, std::uint64_t factor) {
  for (auto& p : pairs) {
    for (auto* m : {&p.first_member, &p.second_member}) {
      m->identify_first *= factor;
      m->identify_second *= factor;
      m->inconclusive *= factor;
    }
  }
  return pairs;
}

TEST(PairStats, FromCountsConditionsOnMember) {
  const auto p = PairStats::from_counts(1, 3, {30, 5, 65}, {10, 50, 140});
  EXPECT_DOUBLE_EQ(p.p_usd_hat, 0.5 * (0.3 + 0.25));
  EXPECT_FALSE(p.exact);
  EXPECT_THROW(PairStats::from_counts(2, 1, {1, 0, 0}, {0, 1, 0}), InvalidInput);
  EXPECT_THROW(PairStats::from_counts(1, 2, {0, 0, 0}, {0, 1, 0}), InvalidInput);
  EXPECT_THROW(PairStats::exact_value(1, 2, 1.5), InvalidInput);
}

TEST(EnsembleSize, RequiresEveryPairOnce) {
  auto pairs = exact_sic_pairs(2);
  EXPECT_EQ(ensemble_size_from_pairs(pairs), 4);
  auto missing = pairs;
  missing.pop_back();
  EXPECT_THROW(ensemble_size_from_pairs(missing), InvalidInput);
  auto duplicate = pairs;
  duplicate.back() = duplicate.front();
  EXPECT_THROW(ensemble_size_from_pairs(duplicate), InvalidInput);
  EXPECT_THROW(s_t(missing, 2), InvalidInput);
  EXPECT_THROW(ensemble_size_from_pairs({}), InvalidInput);
}

TEST(St, Examples) {
  const auto sic = s_t(exact_sic_pairs(2), 2);
  EXPECT_NEAR(sic.value, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(sic.mode, StatMode::kExact);
  EXPECT_EQ(sic.sigma, 0.0);

  std::vector<PairStats> orthogonal;
  for (int a = 1; a <= 5; ++a)
    for (int b = a + 1; b <= 5; ++b) orthogonal.push_back(PairStats::exact_value(a, b, 1.0));
  EXPECT_EQ(s_t(orthogonal, 2).value, 0.0);

  EXPECT_NEAR(s_t(exact_sic_pairs(10), 2).value, 900.0 / 22.0, 1e-8);
}

TEST(St, PaperMeasuredDimensionTenIsWithinOneSigma) {
  const double measured = 41.5, sigma = 0.6724;
  EXPECT_LE(std::abs(measured - 900.0 / 22.0) / sigma, 1.0);
}

TEST(TheoreticalMin, Examples) {
  EXPECT_NEAR(theoretical_min(2, 4, 2), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(theoretical_min(6, 36, 2), 36.0 * 5.0 / 14.0, 1e-10);
  for (int d = 2; d <= 8; ++d) EXPECT_NEAR(theoretical_min(d, static_cast<std::size_t>(d), 1), 0.0, 1e-12);
  const double frozen[][2] = {{2, 2.0 / 3.0}, {3, 2.25},   {4, 4.8},    {5, 25.0 / 3.0},
                              {6, 90.0 / 7.0}, {7, 18.375}, {8, 224.0 / 9.0}, {9, 32.4},
                              {10, 450.0 / 11.0}};
  for (const auto& row : frozen) {
    const int d = static_cast<int>(row[0]);
    EXPECT_NEAR(theoretical_min(d, static_cast<std::size_t>(d * d), 2), row[1], 1e-10);
  }
}

TEST(St, ExactSicSaturatesTheBound) {
  for (int d = 2; d <= 10; ++d) {
    EXPECT_NEAR(s_t(exact_sic_pairs(d), 2).value, theoretical_min(d, static_cast<std::size_t>(d * d), 2), 1e-9)
        << "d=" << d;
  }
}

TEST(St, BoundHoldsForRandomEnsembles) {
  std::mt19937_64 rng(97);
  for (int d = 2; d <= 4; ++d) {
    for (int i = 0; i < 200; ++i) {
      const int n = 2 + i % (d * d + 3);
      std::vector<QuditState> states;
      for (int k = 0; k < n; ++k) states.push_back(testing::random_state(d, rng));
      const auto pairs = exact_pair_stats(StateEnsemble(std::move(states)));
      for (int t = 1; t <= 2; ++t) {
        ASSERT_GE(s_t(pairs, t).value, theoretical_min(d, static_cast<std::size_t>(n), t) - 1e-9)
            << "d=" << d << " n=" << n << " t=" << t;
      }
    }
  }
}

TEST(St, PermutationInvariant) {
  std::mt19937_64 rng(101);
  auto pairs = exact_sic_pairs(4);
  const double reference = s_t(pairs, 2).value;
  for (int i = 0; i < 10; ++i) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    EXPECT_NEAR(s_t(pairs, 2).value, reference, 1e-12);
  }
}

TEST(AlphaEps, Examples) {
  EXPECT_EQ(alpha_eps(0.0), 1.0);
  EXPECT_EQ(alpha_eps(0.1), 2.25);
  EXPECT_NEAR(alpha_eps(0.25), 5.598076211353316, 1e-13);
  EXPECT_THROW(alpha_eps(0.5), DomainError);
  EXPECT_THROW(alpha_eps(0.7), DomainError);
  EXPECT_THROW(alpha_eps(-1e-3), DomainError);
}

TEST(AlphaEps, StrictlyIncreasingOnGrid) {
  double prev = alpha_eps(0.0);
  for (int i = 1; i <= 45; ++i) {
    const double next = alpha_eps(0.01 * i);
    EXPECT_GT(next, prev) << "eps=" << 0.01 * i;
    prev = next;
  }
}

TEST(SEps, Examples) {
  const auto pairs = exact_sic_pairs(2);
  EXPECT_EQ(s_eps(pairs, 0.0, 2).value, s_t(pairs, 2).value);
  EXPECT_NEAR(s_eps(pairs, 0.1, 2).value, 66.90190072682663, 1e-10);
  const std::vector<PairStats> single{PairStats::exact_value(1, 2, alpha_eps(0.0))};
  EXPECT_EQ(s_eps(single, 0.0, 2).value, 0.0);
  EXPECT_THROW(s_eps(pairs, 0.5, 2), DomainError);
}

TEST(SEps, EqualsStAtZeroForSampledData) {
  const auto pairs = sampled_qubit_sic_pairs(500, 3);
  const BootstrapOptions boot{200, 4};
  const auto a = s_eps(pairs, 0.0, 2, boot);
  const auto b = s_t(pairs, 2, boot);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.sigma, b.sigma);
}

TEST(PoissonSigma, ExactModeIsZero) {
  EXPECT_EQ(poisson_sigma(exact_sic_pairs(2), 2, 1000, 1).sigma, 0.0);
}

TEST(PoissonSigma, HalvesWhenCountsQuadruple) {
  const auto base = sampled_qubit_sic_pairs(1000, 5);
  const double s1 = poisson_sigma(base, 2, 1000, 6).sigma;
  const double s4 = poisson_sigma(scaled(base, 4), 2, 1000, 6).sigma;
  EXPECT_NEAR(s4 / s1, 0.5, 0.5 * 0.15);
}

TEST(PoissonSigma, PaperFluxGivesPaperErrorBar) {
  // About 3e4 coincidences per second for 3 s, spread over 6 pairs x 2 members.
  const auto pairs = sampled_qubit_sic_pairs(7500, 7);
  const double sigma = poisson_sigma(pairs, 2, 1000, 8).sigma;
  EXPECT_GT(sigma, 0.0078 / 2.0);
  EXPECT_LT(sigma, 0.0078 * 2.0);
}

TEST(PoissonSigma, DeterministicForSeed) {
  const auto pairs = sampled_qubit_sic_pairs(300, 9);
  EXPECT_EQ(poisson_sigma(pairs, 2, 500, 10).sigma, poisson_sigma(pairs, 2, 500, 10).sigma);
  EXPECT_NE(poisson_sigma(pairs, 2, 500, 10).sigma, poisson_sigma(pairs, 2, 500, 11).sigma);
}

TEST(PoissonSigma, WarnsWhenResamplesAreRedrawn) {
  std::vector<PairStats> sparse;
  for (int a = 1; a <= 3; ++a)
    for (int b = a + 1; b <= 3; ++b) sparse.push_back(PairStats::from_counts(a, b, {0, 0, 1}, {0, 0, 1}));
  const auto r = poisson_sigma(sparse, 2, 200, 12);
  EXPECT_GT(r.redraws, 0u);
  EXPECT_TRUE(r.warning());
  EXPECT_TRUE(s_t(sparse, 2, {200, 12}).bootstrap_warning);
}

TEST(PoissonSigma, RejectsTooFewResamples) {
  EXPECT_THROW(poisson_sigma(sampled_qubit_sic_pairs(100, 1), 2, 99, 0), InvalidInput);
}

TEST(Verdict, ExactSicIsCertified) {
  const auto v = verdict(s_t(exact_sic_pairs(2), 2), 2, 4, 2);
  EXPECT_TRUE(v.certified);
  EXPECT_NEAR(v.z_score, 0.0, 1e-3);
  EXPECT_EQ(v.k_sigma, 3.0);
}

TEST(Verdict, PaperQubitNumbers) {
  StStatistic s;
  s.value = 0.69;
  s.sigma = 0.0078;
  s.mode = StatMode::kSampled;
  s.t = 2;
  const auto v = verdict(s, 2, 4, 2);
  EXPECT_NEAR(v.z_score, 2.9915, 1e-4);
  EXPECT_TRUE(v.certified);
  EXPECT_FALSE(verdict(s, 2, 4, 2, 2.0).certified);
}

TEST(Verdict, PaperDimensionTenNumbers) {
  StStatistic s;
  s.value = 41.5;
  s.sigma = 0.6724;
  s.mode = StatMode::kSampled;
  const auto v = verdict(s, 10, 100, 2);
  EXPECT_NEAR(v.z_score, 0.8788, 1e-4);
  EXPECT_TRUE(v.certified);
}

TEST(Verdict, RepeatedStatesAreRejected) {
  std::vector<PairStats> repeated;
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b) repeated.push_back(PairStats::exact_value(a, b, 0.0));
  const auto s = s_t(repeated, 2);
  EXPECT_DOUBLE_EQ(s.value, 6.0);
  EXPECT_FALSE(verdict(s, 2, 4, 2).certified);
  EXPECT_THROW(verdict(s, 2, 4, 2, 0.0), InvalidInput);
}

TEST(ResultRecord, JsonRoundTrip) {
  const auto run = CertificationRun::sic_family(2, 1000, 42);
  auto rec = ResultRecord::from_verdict(verdict(s_t(exact_sic_pairs(2), 2), 2, 4, 2), run, true);
  EXPECT_EQ(rec.shots, 0u);
  nlohmann::json j = rec;
  for (const char* key : {"d", "N", "t", "S_value", "sigma", "bound", "z", "certified", "seed", "shots"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_FALSE(j.contains("epsilon"));
  rec.epsilon = 0.1;
  j = rec;
  const auto back = j.get<ResultRecord>();
  EXPECT_EQ(back.epsilon, 0.1);
  EXPECT_EQ(back.s_value, rec.s_value);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.n, 4);
}

TEST(CertificationRun, Validation) {
  EXPECT_THROW(CertificationRun::sic_family(1, 10, 0), InvalidInput);
  const auto run = CertificationRun::sic_family(3, 10, 0);
  EXPECT_EQ(run.n, 9);
  EXPECT_EQ(run.t, 2);
  CertificationRun bad{2, 4, 0, 10, 0};
  EXPECT_THROW(bad.validate(), InvalidInput);
}

}  // namespace
}  // namespace usdcert
