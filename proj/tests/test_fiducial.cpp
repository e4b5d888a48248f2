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


#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "usdcert/error.hpp"
#include "usdcert/fiducial.hpp"

namespace usdcert {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("usdcert_test_" + name);
}

void expect_sic_overlaps(const QuditState& fiducial, double tol) {
  const int d = fiducial.dim();
  const auto orbit = wh_orbit(fiducial);
  const double target = 1.0 / std::sqrt(d + 1.0);
  for (std::size_t a = 0; a < orbit.size(); ++a) {
    for (std::size_t b = a + 1; b < orbit.size(); ++b) {
      ASSERT_NEAR(std::abs(overlap(orbit[a], orbit[b])), target, tol) << "d=" << d << " pair " << a << "," << b;
    }
  }
}

TEST(OrbitPotential, TimesNSquaredEqualsOrbitFramePotential) {
  std::mt19937_64 rng(41);
  for (int d = 2; d <= 9; ++d) {
    const auto s = testing::random_state(d, rng);
    EXPECT_NEAR(d * d * orbit_potential(s.amplitudes()), frame_potential(wh_orbit(s), 2), 1e-10 * d * d);
  }
}

TEST(OrbitPotential, ScaleAndPhaseInvariant) {
  std::mt19937_64 rng(43);
  const auto s = testing::random_state(5, rng).amplitudes();
  EXPECT_NEAR(orbit_potential(s * Complex(2.5, -1.0)), orbit_potential(s), 1e-13);
}

TEST(OrbitPotential, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(47);
  const double h = 1e-6;
  for (int point = 0; point < 10; ++point) {
    const int d = 2 + point % 7;
    const auto v = testing::random_state(d, rng).amplitudes();
    const auto g = orbit_potential_gradient(v);
    double max_err = 0.0, scale = 0.0;
    for (int k = 0; k < d; ++k) {
      for (const Complex dir : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
        Amplitudes plus = v, minus = v;
        plus[k] += h * dir;
        minus[k] -= h * dir;
        const double fd = (orbit_potential(plus) - orbit_potential(minus)) / (2.0 * h);
        const double analytic = dir.imag() == 0.0 ? g[k].real() : g[k].imag();
        max_err = std::max(max_err, std::abs(fd - analytic));
        scale = std::max(scale, std::abs(analytic));
      }
    }
    EXPECT_LE(max_err, 1e-5 * scale) << "point " << point << " d=" << d;
  }
}

TEST(OrbitPotential, RejectsDegenerateInput) {
  EXPECT_THROW(orbit_potential(Amplitudes::Zero(3)), InvalidInput);
  EXPECT_THROW(orbit_potential(Amplitudes::Ones(1)), InvalidInput);
  EXPECT_THROW(orbit_potential_gradient(Amplitudes::Zero(3)), InvalidInput);
}

TEST(FindSicFiducial, Qubit) {
  const auto r = find_sic_fiducial(2, {}, 1);
  EXPECT_TRUE(r.report.is_design);
  EXPECT_NEAR(r.report.frame_potential, 16.0 / 3.0, 1e-9);
  expect_sic_overlaps(r.fiducial, 1e-6);
}

TEST(FindSicFiducial, DimensionSix) {
  const auto r = find_sic_fiducial(6, {}, 2);
  EXPECT_NEAR(r.report.frame_potential, 2.0 * 216.0 / 7.0, 1e-8);
  expect_sic_overlaps(r.fiducial, 1e-6);
}

TEST(FindSicFiducial, DimensionTen) {
  const auto r = find_sic_fiducial(10, {}, 3);
  EXPECT_NEAR(r.report.frame_potential, 2000.0 / 11.0, 1e-8);
  expect_sic_overlaps(r.fiducial, 1e-6);
}

TEST(FindSicFiducial, OverlapsForSmallDimensions) {
  for (int d = 3; d <= 7; ++d) {
    const auto r = find_sic_fiducial(d, {}, 100 + d);
    EXPECT_LE(r.report.excess, 1e-8);
    expect_sic_overlaps(r.fiducial, 1e-6);
  }
}

TEST(FindSicFiducial, SteepestDescentAlsoConverges) {
  FiducialSearchConfig config;
  config.step_rule = StepRule::kSteepestDescent;
  config.max_iterations = 20000;
  for (int d : {2, 3}) {
    const auto r = find_sic_fiducial(d, config, 9);
    EXPECT_LE(r.report.excess, 1e-8);
  }
}

TEST(FindSicFiducial, DeterministicForSeed) {
  FiducialSearchConfig config;
  config.restarts = 6;
  const auto a = find_sic_fiducial(4, config, 77);
  const auto b = find_sic_fiducial(4, config, 77);
  EXPECT_EQ(a.restart, b.restart);
  EXPECT_TRUE(a.fiducial.amplitudes() == b.fiducial.amplitudes());
}

TEST(FindSicFiducial, RejectsUnsupportedInput) {
  EXPECT_THROW(find_sic_fiducial(1, {}, 0), InvalidInput);
  EXPECT_THROW(find_sic_fiducial(17, {}, 0), InvalidInput);
  FiducialSearchConfig bad;
  bad.restarts = 0;
  EXPECT_THROW(find_sic_fiducial(2, bad, 0), InvalidInput);
  bad = {};
  bad.tolerance = 0.0;
  EXPECT_THROW(find_sic_fiducial(2, bad, 0), InvalidInput);
}

TEST(FindSicFiducial, ReportsBestExcessOnFailure) {
  FiducialSearchConfig config;
  config.restarts = 1;
  config.max_iterations = 1;
  try {
    find_sic_fiducial(7, config, 5);
    FAIL() << "expected SearchFailed";
  } catch (const SearchFailed& e) {
    EXPECT_EQ(e.dim(), 7);
    EXPECT_GT(e.best_excess(), config.tolerance);
  }
}

TEST(FiducialRecord, HasSeventeenSignificantDigits) {
  const auto rec = format_fiducial_record(testing::qubit_sic_fiducial());
  EXPECT_EQ(rec.substr(0, 2), "2;");
  const auto first = rec.substr(2, rec.find(',') - 2);
  std::size_t digits = 0;
  for (char c : first.substr(0, first.find('e'))) digits += std::isdigit(static_cast<unsigned char>(c)) ? 1 : 0;
  EXPECT_GE(digits, 17u);
}

TEST(FiducialRecord, RoundTripsRandomStates) {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 100; ++i) {
    const auto s = testing::random_state(2 + i % 15, rng);
    const auto back = parse_fiducial_record(format_fiducial_record(s));
    ASSERT_EQ(back.dim(), s.dim());
    EXPECT_LE((back.amplitudes() - s.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(FiducialRecord, RejectsMalformedLines) {
  EXPECT_THROW(parse_fiducial_record(""), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("x;1,0;0,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2;1,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2;1,0;0,0;0,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2;1 0;0,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2;1,0;0,abc"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2;0,0;0,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("1;1,0"), InvalidInput);
  EXPECT_THROW(parse_fiducial_record("2.5;1,0;0,0"), InvalidInput);
}

TEST(FiducialFile, WriteReadAndVerify) {
  const auto path = temp_path("fiducials.txt");
  FiducialTable table;
  table.emplace(2, testing::qubit_sic_fiducial());
  table.emplace(3, find_sic_fiducial(3, {}, 8).fiducial);
  write_fiducial_file(path, table);

  {
    std::ofstream append(path, std::ios::app);
    append << "# comment\n\n";
  }
  const auto back = read_fiducial_file(path);
  ASSERT_EQ(back.size(), 2u);
  const auto loaded = load_verified_fiducial(path, 3);
  ASSERT_TRUE(loaded.has_value());
  EXPECT_LE(loaded->report.excess, 1e-8);
  EXPECT_FALSE(load_verified_fiducial(path, 5).has_value());
  std::filesystem::remove(path);
}

TEST(FiducialFile, RejectsRecordThatIsNotADesign) {
  const auto path = temp_path("bad_fiducials.txt");
  FiducialTable table;
  table.emplace(2, QuditState::basis(2, 0));
  write_fiducial_file(path, table);
  EXPECT_THROW(load_verified_fiducial(path, 2), InvalidInput);
  std::filesystem::remove(path);
}

TEST(FiducialFile, MissingFileIsAnError) {
  EXPECT_THROW(read_fiducial_file(temp_path("does_not_exist.txt")), InvalidInput);
}

TEST(ShippedFiducials, EveryDimensionVerifiesQuickly) {
  const auto start = std::chrono::steady_clock::now();
  const auto table = read_fiducial_file(USDCERT_FIDUCIAL_FILE);
  for (int d = kMinFiducialDim; d <= kMaxFiducialDim; ++d) {
    const auto r = load_verified_fiducial(USDCERT_FIDUCIAL_FILE, d);
    ASSERT_TRUE(r.has_value()) << "d=" << d;
    EXPECT_LE(r->report.excess, 1e-8) << "d=" << d;
  }
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(table.size(), static_cast<std::size_t>(kMaxFiducialDim - kMinFiducialDim + 1));
  EXPECT_LT(elapsed, 1.0);
}

}  // namespace
}  // namespace usdcert
