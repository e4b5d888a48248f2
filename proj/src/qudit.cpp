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

#include "usdcert/qudit.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "usdcert/error.hpp"

namespace usdcert {

namespace {

void check_amplitudes(const Amplitudes& a) {
  if (a.size() < 2) {
    throw InvalidInput("qudit dimension must be at least 2, got " + std::to_string(a.size()));
  }
  if (!a.allFinite()) throw InvalidInput("qudit amplitudes must be finite");
}

double int_pow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

QuditState::QuditState(Amplitudes amplitudes) : amplitudes_(std::move(amplitudes)) {
  check_amplitudes(amplitudes_);
  const double norm2 = amplitudes_.squaredNorm();
  if (std::abs(norm2 - 1.0) > kNormTolerance) {
    throw InvalidInput("qudit state is not normalized (|psi|^2 = " + std::to_string(norm2) + ")");
  }
}

QuditState QuditState::normalized(Amplitudes amplitudes) {
  check_amplitudes(amplitudes);
  const double norm = amplitudes.norm();
  if (norm == 0.0) throw InvalidInput("cannot normalize the zero vector");
  amplitudes /= norm;
  return QuditState(std::move(amplitudes));
}

QuditState QuditState::basis(int dim, int k) {
  if (dim < 2) throw InvalidInput("qudit dimension must be at least 2");
  if (k < 0 || k >= dim) throw InvalidInput("basis index out of range");
  Amplitudes a = Amplitudes::Zero(dim);
  a[k] = 1.0;
  return QuditState(std::move(a));
}

StateEnsemble::StateEnsemble(std::vector<QuditState> states) : dim_(0), states_(std::move(states)) {
  if (states_.size() < 2) throw InvalidInput("an ensemble needs at least two states");
  dim_ = states_.front().dim();
  for (const auto& s : states_) {
    if (s.dim() != dim_) throw InvalidInput("ensemble states must share one dimension");
  }
}

Complex overlap(const QuditState& a, const QuditState& b) {
  if (a.dim() != b.dim()) {
    throw InvalidInput("overlap: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()) + ")");
  }
  return a.amplitudes().dot(b.amplitudes());  // Eigen's dot conjugates the left operand
}

Amplitudes weyl_heisenberg(const Amplitudes& v, int shift, int phase) {
  const int d = static_cast<int>(v.size());
  const int j = ((shift % d) + d) % d;
  const int k = ((phase % d) + d) % d;
  Amplitudes out(d);
  for (int n = 0; n < d; ++n) {
    const int m = (n - j + d) % d;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * m) % d) / d;
    out[n] = std::polar(1.0, angle) * v[m];
  }
  return out;
}

StateEnsemble wh_orbit(const QuditState& fiducial) {
  const int d = fiducial.dim();
  std::vector<QuditState> states;
  states.reserve(static_cast<std::size_t>(d) * d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      states.push_back(QuditState::normalized(weyl_heisenberg(fiducial.amplitudes(), j, k)));
    }
  }
  return StateEnsemble(std::move(states));
}

StateEnsemble basis_ensemble(int dim) {
  std::vector<QuditState> states;
  for (int k = 0; k < dim; ++k) states.push_back(QuditState::basis(dim, k));
  return StateEnsemble(std::move(states));
}

double frame_potential(const StateEnsemble& ensemble, int t) {
  if (t < 1) throw InvalidInput("frame potential order t must be >= 1");
  const std::size_t n = ensemble.size();
  // Diagonal terms are |<psi|psi>|^{2t} = 1 each; off-diagonal pairs appear twice.
  double off = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      off += int_pow(std::norm(overlap(ensemble[a], ensemble[b])), t);
    }
  }
  double diag = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    diag += int_pow(std::norm(overlap(ensemble[a], ensemble[a])), t);
  }
  return diag + 2.0 * off;
}

double welch_bound(int dim, std::size_t n, int t) {
  if (dim < 2) throw InvalidInput("welch_bound: dimension must be >= 2");
  if (n < 2) throw InvalidInput("welch_bound: ensemble size must be >= 2");
  if (t < 1) throw InvalidInput("welch_bound: order t must be >= 1");
  // t! (d-1)! / (t+d-1)! = prod_{i=1..t} i / (d-1+i)
  double ratio = 1.0;
  for (int i = 1; i <= t; ++i) ratio *= static_cast<double>(i) / static_cast<double>(dim - 1 + i);
  const double nn = static_cast<double>(n);
  return nn * nn * ratio;
}

DesignReport is_t_design(const StateEnsemble& ensemble, int t, double tol) {
  DesignReport r;
  r.t = t;
  r.frame_potential = frame_potential(ensemble, t);
  r.welch_bound = welch_bound(ensemble.dim(), ensemble.size(), t);
  r.excess = r.frame_potential - r.welch_bound;
  r.is_design = r.excess <= tol;
  return r;
}

}  // namespace usdcert
