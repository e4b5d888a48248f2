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

#ifndef USDCERT_USD_HPP
#define USDCERT_USD_HPP

#include <string_view>

#include <Eigen/Dense>

#include "usdcert/qudit.hpp"

namespace usdcert {

using Matrix = Eigen::MatrixXcd;

/// Measurement outcome b of a pairwise discrimination task. The integer values
/// are the protocol labels: -1 identifies the first state of the pair, +1 the
/// second, and 0 encodes the inconclusive outcome.
enum class Outcome : int {
  kIdentifyFirst = -1,
  kInconclusive = 0,
  kIdentifySecond = 1,
};

/// "-1", "1" or "inc".
std::string_view to_string(Outcome outcome) noexcept;
Outcome outcome_from_string(std::string_view text);

struct OutcomeProbabilities {
  double first = 0.0;
  double second = 0.0;
  double inconclusive = 0.0;

  double total() const noexcept { return first + second + inconclusive; }
};

/// Symmetric relabeling noise on the conclusive outcomes, 0 <= epsilon < 1/2.
class ErrorModel {
 public:
  ErrorModel() = default;
  explicit ErrorModel(double epsilon);

  double epsilon() const noexcept { return epsilon_; }

 private:
  double epsilon_ = 0.0;
};

/// Optimal equal-prior unambiguous discrimination measurement for a pair of
/// pure states. E_first and E_second are rank one and live in span{psi1, psi2};
/// E_inconclusive is the identity minus both.
class UsdPovm {
 public:
  int dim() const noexcept { return static_cast<int>(first_dir_.size()); }

  /// |<psi1|psi2>| of the pair the measurement was built for.
  double overlap_modulus() const noexcept { return overlap_; }

  Matrix first() const;
  Matrix second() const;
  Matrix inconclusive() const;

  /// Probabilities for a (possibly subnormalized) input vector. The
  /// inconclusive component is |v|^2 minus the conclusive ones.
  OutcomeProbabilities probabilities(const Amplitudes& v) const;

 private:
  friend UsdPovm build_usd_povm(const QuditState&, const QuditState&);

  // E_first = weight |first_dir><first_dir|, E_second = weight |second_dir><second_dir|
  Amplitudes first_dir_;
  Amplitudes second_dir_;
  double weight_ = 1.0;
  double overlap_ = 0.0;
};

/// Pairs closer than this to identical are rejected.
inline constexpr double kIdenticalStateTolerance = 1e-12;

UsdPovm build_usd_povm(const QuditState& psi1, const QuditState& psi2);

OutcomeProbabilities outcome_probabilities(const UsdPovm& povm, const QuditState& psi);

/// 1/2 [ p(first | psi1) + p(second | psi2) ].
double p_usd(const UsdPovm& povm, const QuditState& psi1, const QuditState& psi2);

/// Each conclusive outcome flips to the other with probability epsilon.
OutcomeProbabilities apply_error_channel(const OutcomeProbabilities& probs, const ErrorModel& model);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const Matrix& hermitian);

}  // namespace usdcert

#endif  // USDCERT_USD_HPP
