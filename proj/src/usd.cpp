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

#include "usdcert/usd.hpp"

#include <cmath>
#include <string>

#include "usdcert/error.hpp"

namespace usdcert {

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::kIdentifyFirst:
      return "-1";
    case Outcome::kIdentifySecond:
      return "1";
    case Outcome::kInconclusive:
      return "inc";
  }
  return "inc";
}

Outcome outcome_from_string(std::string_view text) {
  if (text == "-1") return Outcome::kIdentifyFirst;
  if (text == "1") return Outcome::kIdentifySecond;
  if (text == "inc") return Outcome::kInconclusive;
  throw InvalidInput("unknown outcome label '" + std::string(text) + "'");
}

ErrorModel::ErrorModel(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw DomainError("error rate must satisfy 0 <= epsilon < 1/2, got " + std::to_string(epsilon));
  }
}

Matrix UsdPovm::first() const { return weight_ * first_dir_ * first_dir_.adjoint(); }

Matrix UsdPovm::second() const { return weight_ * second_dir_ * second_dir_.adjoint(); }

Matrix UsdPovm::inconclusive() const {
  return Matrix::Identity(dim(), dim()) - first() - second();
}

OutcomeProbabilities UsdPovm::probabilities(const Amplitudes& v) const {
  if (v.size() != first_dir_.size()) {
    throw InvalidInput("measurement dimension mismatch (" + std::to_string(v.size()) + " vs " +
                       std::to_string(first_dir_.size()) + ")");
  }
  OutcomeProbabilities p;
  p.first = weight_ * std::norm(first_dir_.dot(v));
  p.second = weight_ * std::norm(second_dir_.dot(v));
  p.inconclusive = std::max(0.0, v.squaredNorm() - p.first - p.second);
  return p;
}

UsdPovm build_usd_povm(const QuditState& psi1, const QuditState& psi2) {
  const Complex c = overlap(psi1, psi2);
  const double s = std::abs(c);
  if (s >= 1.0 - kIdenticalStateTolerance) {
    throw InvalidInput("states are identical up to phase; no unambiguous discrimination exists");
  }
  const Amplitudes& a = psi1.amplitudes();
  const Amplitudes& b = psi2.amplitudes();
  // In-span unit vectors orthogonal to psi2 and to psi1 respectively.
  Amplitudes perp2 = a - b * b.dot(a);
  Amplitudes perp1 = b - a * c;
  perp2.normalize();
  perp1.normalize();

  UsdPovm povm;
  povm.first_dir_ = std::move(perp2);
  povm.second_dir_ = std::move(perp1);
  povm.weight_ = 1.0 / (1.0 + s);
  povm.overlap_ = s;
  return povm;
}

OutcomeProbabilities outcome_probabilities(const UsdPovm& povm, const QuditState& psi) {
  return povm.probabilities(psi.amplitudes());
}

double p_usd(const UsdPovm& povm, const QuditState& psi1, const QuditState& psi2) {
  return 0.5 * (outcome_probabilities(povm, psi1).first + outcome_probabilities(povm, psi2).second);
}

OutcomeProbabilities apply_error_channel(const OutcomeProbabilities& probs, const ErrorModel& model) {
  const double e = model.epsilon();
  return {(1.0 - e) * probs.first + e * probs.second, (1.0 - e) * probs.second + e * probs.first,
          probs.inconclusive};
}

double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace usdcert
