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

// Test-only reference computations. Everything here is written against raw
// std::complex arithmetic so it stays independent of the library code paths
// under test.

#ifndef USDCERT_TESTS_ORACLES_HPP
#define USDCERT_TESTS_ORACLES_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "usdcert/qudit.hpp"

namespace usdcert::testing {

using Cvec = std::vector<std::complex<double>>;

inline Cvec to_cvec(const QuditState& s) {
  Cvec v(static_cast<std::size_t>(s.dim()));
  for (int k = 0; k < s.dim(); ++k) v[static_cast<std::size_t>(k)] = s[k];
  return v;
}

inline std::complex<double> brute_inner(const Cvec& a, const Cvec& b) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
  return acc;
}

/// Ordered-pair frame potential by direct enumeration.
inline double brute_frame_potential(const StateEnsemble& e, int t) {
  std::vector<Cvec> v;
  for (const auto& s : e) v.push_back(to_cvec(s));
  double sum = 0.0;
  for (const auto& a : v) {
    for (const auto& b : v) sum += std::pow(std::abs(brute_inner(a, b)), 2.0 * t);
  }
  return sum;
}

/// Frame potential of a SIC: N diagonal terms plus N(N-1) overlaps of 1/(d+1)^t.
inline double sic_frame_potential(int d, int t) {
  const double n = static_cast<double>(d) * d;
  return n + n * (n - 1.0) / std::pow(d + 1.0, t);
}

/// N^2 t!(d-1)!/(t+d-1)! through log-gamma.
inline double welch_bound_gamma(int d, double n, int t) {
  return n * n * std::exp(std::lgamma(t + 1.0) + std::lgamma(d) - std::lgamma(t + d));
}

/// Known qubit SIC fiducial.
inline QuditState qubit_sic_fiducial() {
  const double r3 = std::sqrt(3.0);
  Amplitudes a(2);
  a[0] = std::sqrt((3.0 + r3) / 6.0);
  a[1] = std::polar(std::sqrt((3.0 - r3) / 6.0), std::numbers::pi / 4.0);
  return QuditState::normalized(a);
}

inline QuditState random_state(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Amplitudes a(d);
  for (int k = 0; k < d; ++k) a[k] = {g(rng), g(rng)};
  return QuditState::normalized(a);
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
inline Eigen::MatrixXcd haar_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = {g(rng), g(rng)};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) q.col(k) *= r(k, k) / std::abs(r(k, k));
  return q;
}

/// Two states with |<a|b>| = s exactly: a = e0, b = s e0 + sqrt(1-s^2) e1,
/// then rotated by a random unitary.
inline std::pair<QuditState, QuditState> pair_with_overlap(int d, double s, std::mt19937_64& rng) {
  Amplitudes a = Amplitudes::Zero(d), b = Amplitudes::Zero(d);
  a[0] = 1.0;
  b[0] = s;
  b[1] = std::sqrt(1.0 - s * s);
  const auto u = haar_unitary(d, rng);
  return {QuditState::normalized(u * a), QuditState::normalized(u * b)};
}

inline StateEnsemble rotate(const StateEnsemble& e, const Eigen::MatrixXcd& u) {
  std::vector<QuditState> out;
  for (const auto& s : e) out.push_back(QuditState::normalized(u * s.amplitudes()));
  return StateEnsemble(std::move(out));
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace usdcert::testing

#endif  // USDCERT_TESTS_ORACLES_HPP
