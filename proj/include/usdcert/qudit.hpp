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

#ifndef USDCERT_QUDIT_HPP
#define USDCERT_QUDIT_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace usdcert {

using Complex = std::complex<double>;
using Amplitudes = Eigen::VectorXcd;

/// Tolerance on the norm of a stored pure state.
inline constexpr double kNormTolerance = 1e-12;

/// A pure qudit state |psi> with unit norm and dimension >= 2.
class QuditState {
 public:
  /// Wraps amplitudes that are already normalized to kNormTolerance.
  explicit QuditState(Amplitudes amplitudes);

  /// Rescales arbitrary nonzero amplitudes to unit norm.
  static QuditState normalized(Amplitudes amplitudes);

  /// Computational basis vector e_k.
  static QuditState basis(int dim, int k);

  int dim() const noexcept { return static_cast<int>(amplitudes_.size()); }
  const Amplitudes& amplitudes() const noexcept { return amplitudes_; }
  Complex operator[](int k) const { return amplitudes_[k]; }

 private:
  Amplitudes amplitudes_;
};

/// Ordered list of N >= 2 states sharing one dimension.
class StateEnsemble {
 public:
  explicit StateEnsemble(std::vector<QuditState> states);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return states_.size(); }
  const QuditState& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<QuditState>& states() const noexcept { return states_; }
  auto begin() const noexcept { return states_.begin(); }
  auto end() const noexcept { return states_.end(); }

 private:
  int dim_;
  std::vector<QuditState> states_;
};

/// <a|b>, conjugate-linear in the first argument.
Complex overlap(const QuditState& a, const QuditState& b);

/// X^shift Z^phase applied to raw amplitudes, where X|m> = |m+1> and
/// Z|m> = w^m |m> with w = exp(2 pi i / d).
Amplitudes weyl_heisenberg(const Amplitudes& v, int shift, int phase);

/// The d^2 displaced copies X^j Z^k |fiducial>, ordered j-major.
StateEnsemble wh_orbit(const QuditState& fiducial);

/// The computational basis {e_0, ..., e_{d-1}} as an ensemble.
StateEnsemble basis_ensemble(int dim);

/// Sum of |<psi_a|psi_b>|^(2t) over all ordered pairs, diagonal included.
double frame_potential(const StateEnsemble& ensemble, int t);

/// Lower bound N^2 t! (d-1)! / (t+d-1)! on the ordered-pair frame potential.
double welch_bound(int dim, std::size_t n, int t);

struct DesignReport {
  double frame_potential = 0.0;
  double welch_bound = 0.0;
  double excess = 0.0;
  bool is_design = false;
  int t = 0;
};

/// Frame-potential saturation test: is_design iff excess <= tol.
DesignReport is_t_design(const StateEnsemble& ensemble, int t, double tol);

}  // namespace usdcert

#endif  // USDCERT_QUDIT_HPP
