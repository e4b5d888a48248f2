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

#include "usdcert/fiducial.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "usdcert/error.hpp"
#include "usdcert/parallel.hpp"
#include "usdcert/rng.hpp"

namespace usdcert {

void FiducialSearchConfig::validate() const {
  if (restarts < 1) throw InvalidInput("fiducial search needs at least one restart");
  if (max_iterations < 1) throw InvalidInput("fiducial search needs max_iterations >= 1");
  if (!(tolerance > 0.0)) throw InvalidInput("fiducial search tolerance must be positive");
  if (!(gradient_tolerance > 0.0)) throw InvalidInput("gradient tolerance must be positive");
}

namespace {

// Phase table w^m for m in [0, d).
std::vector<Complex> roots_of_unity(int d) {
  std::vector<Complex> w(d);
  for (int m = 0; m < d; ++m) w[m] = std::polar(1.0, 2.0 * std::numbers::pi * m / d);
  return w;
}

struct PotentialEval {
  double value = 0.0;
  Amplitudes gradient;
};

PotentialEval evaluate(const Amplitudes& v, bool want_gradient) {
  const int d = static_cast<int>(v.size());
  const auto w = roots_of_unity(d);
  const double n2 = v.squaredNorm();
  double g = 0.0;
  Amplitudes dg = Amplitudes::Zero(d);  // d g / d conj(v)
  Amplitudes dv(d), dhv(d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      // (D v)[n] = w^{k(n-j)} v[n-j],  (D^H v)[m] = w^{-km} v[m+j]
      for (int n = 0; n < d; ++n) {
        const int m = (n - j + d) % d;
        dv[n] = w[(k * m) % d] * v[m];
        dhv[n] = std::conj(w[(k * n) % d]) * v[(n + j) % d];
      }
      const Complex c = v.dot(dv);
      const double c2 = std::norm(c);
      g += c2 * c2;
      if (want_gradient) dg += (2.0 * c2) * (std::conj(c) * dv + c * dhv);
    }
  }
  PotentialEval out;
  const double n4 = n2 * n2;
  out.value = g / (n4 * n4);
  if (want_gradient) {
    // f = g / n^4 with n = |v|^2; the real gradient is 2 df/d conj(v).
    out.gradient = 2.0 * (dg / (n4 * n4) - (4.0 * g / (n4 * n4 * n2)) * v);
  }
  return out;
}

Eigen::VectorXd pack(const Amplitudes& v) {
  const Eigen::Index d = v.size();
  Eigen::VectorXd x(2 * d);
  x.head(d) = v.real();
  x.tail(d) = v.imag();
  return x;
}

Amplitudes unpack(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size() / 2;
  Amplitudes v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(x[i], x[d + i]);
  return v;
}

struct RestartOutcome {
  Amplitudes fiducial;
  int iterations = 0;
};

RestartOutcome minimize(Amplitudes start, const FiducialSearchConfig& config) {
  constexpr int kMemory = 8;
  constexpr double kArmijo = 1e-4;

  Eigen::VectorXd x = pack(start.normalized());
  PotentialEval cur = evaluate(unpack(x), true);
  Eigen::VectorXd grad = pack(cur.gradient);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
  double step_hint = 1.0;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    if (grad.norm() < config.gradient_tolerance) break;

    Eigen::VectorXd dir = -grad;
    if (config.step_rule == StepRule::kLbfgs && !history.empty()) {
      // Two-loop recursion.
      Eigen::VectorXd q = grad;
      std::vector<double> alpha(history.size());
      for (std::size_t i = history.size(); i-- > 0;) {
        const auto& [s, y] = history[i];
        alpha[i] = s.dot(q) / y.dot(s);
        q -= alpha[i] * y;
      }
      const auto& [s_last, y_last] = history.back();
      q *= s_last.dot(y_last) / y_last.squaredNorm();
      for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& [s, y] = history[i];
        const double beta = y.dot(q) / y.dot(s);
        q += (alpha[i] - beta) * s;
      }
      dir = -q;
      if (dir.dot(grad) >= 0.0) {
        history.clear();
        dir = -grad;
      }
    }

    const double slope = dir.dot(grad);
    double step = config.step_rule == StepRule::kLbfgs && !history.empty() ? 1.0 : step_hint;
    Eigen::VectorXd x_new;
    PotentialEval next;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = x + step * dir;
      x_new.normalize();
      next = evaluate(unpack(x_new), false);
      if (next.value <= cur.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable in double precision
    step_hint = std::min(step * 2.0, 1e3);

    next = evaluate(unpack(x_new), true);
    Eigen::VectorXd grad_new = pack(next.gradient);
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = grad_new - grad;
    if (config.step_rule == StepRule::kLbfgs && s.dot(y) > 1e-300) {
      history.emplace_back(std::move(s), std::move(y));
      if (history.size() > kMemory) history.pop_front();
    }
    x = std::move(x_new);
    grad = std::move(grad_new);
    cur = std::move(next);
  }
  return {unpack(x), it};
}

double sic_orbit_potential(int d) { return 2.0 / (d + 1.0) * d; }

}  // namespace

double orbit_potential(const Amplitudes& v) {
  if (v.size() < 2) throw InvalidInput("orbit_potential: dimension must be >= 2");
  if (v.squaredNorm() == 0.0) throw InvalidInput("orbit_potential: zero vector");
  return evaluate(v, false).value;
}

Amplitudes orbit_potential_gradient(const Amplitudes& v) {
  if (v.size() < 2) throw InvalidInput("orbit_potential_gradient: dimension must be >= 2");
  if (v.squaredNorm() == 0.0) throw InvalidInput("orbit_potential_gradient: zero vector");
  return evaluate(v, true).gradient;
}

DesignReport verify_fiducial(const QuditState& fiducial, double tolerance) {
  return is_t_design(wh_orbit(fiducial), 2, tolerance);
}

FiducialResult find_sic_fiducial(int dim, const FiducialSearchConfig& config, std::uint64_t seed) {
  if (dim < kMinFiducialDim || dim > kMaxFiducialDim) {
    throw InvalidInput("fiducial search supports 2 <= d <= 16, got d = " + std::to_string(dim));
  }
  config.validate();

  const auto restarts = static_cast<std::size_t>(config.restarts);
  std::vector<RestartOutcome> outcomes(restarts);
  std::vector<double> excess(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> normal;
    Amplitudes start(dim);
    for (int i = 0; i < dim; ++i) start[i] = Complex(normal(rng), normal(rng));
    outcomes[r] = minimize(std::move(start), config);
    excess[r] = dim * dim * (orbit_potential(outcomes[r].fiducial) - sic_orbit_potential(dim));
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (excess[r] < excess[best]) best = r;
  }
  auto fiducial = QuditState::normalized(outcomes[best].fiducial);
  DesignReport report = verify_fiducial(fiducial, config.tolerance);
  if (!report.is_design) throw SearchFailed(dim, report.excess);
  return {std::move(fiducial), report, static_cast<int>(best), outcomes[best].iterations};
}

std::string format_fiducial_record(const QuditState& fiducial) {
  std::string out = std::to_string(fiducial.dim());
  char buf[64];
  for (int k = 0; k < fiducial.dim(); ++k) {
    std::snprintf(buf, sizeof buf, ";%.16e,%.16e", fiducial[k].real(), fiducial[k].imag());
    out += buf;
  }
  return out;
}

namespace {

double parse_number(std::string_view text, std::string_view line) {
  std::string tmp(text);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    throw InvalidInput("malformed number '" + tmp + "' in fiducial record: " + std::string(line));
  }
  return v;
}

}  // namespace

QuditState parse_fiducial_record(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(';', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  const double dim_value = parse_number(fields.front(), line);
  const int dim = static_cast<int>(dim_value);
  if (dim != dim_value || dim < 2) {
    throw InvalidInput("bad dimension in fiducial record: " + std::string(line));
  }
  if (static_cast<int>(fields.size()) != dim + 1) {
    throw InvalidInput("fiducial record for d = " + std::to_string(dim) + " has " +
                       std::to_string(fields.size() - 1) + " amplitudes");
  }
  Amplitudes a(dim);
  for (int k = 0; k < dim; ++k) {
    const auto f = fields[k + 1];
    const auto comma = f.find(',');
    if (comma == std::string_view::npos) {
      throw InvalidInput("amplitude without ',' in fiducial record: " + std::string(line));
    }
    a[k] = Complex(parse_number(f.substr(0, comma), line), parse_number(f.substr(comma + 1), line));
  }
  return QuditState::normalized(std::move(a));
}

FiducialTable read_fiducial_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open fiducial file " + path.string());
  FiducialTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto state = parse_fiducial_record(line);
    const int d = state.dim();
    table.insert_or_assign(d, std::move(state));
  }
  return table;
}

void write_fiducial_file(const std::filesystem::path& path, const FiducialTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write fiducial file " + path.string());
  for (const auto& [d, state] : table) out << format_fiducial_record(state) << '\n';
  if (!out) throw InvalidInput("error while writing fiducial file " + path.string());
}

std::optional<FiducialResult> load_verified_fiducial(const std::filesystem::path& path, int dim,
                                                     double tolerance) {
  auto table = read_fiducial_file(path);
  auto it = table.find(dim);
  if (it == table.end()) return std::nullopt;
  DesignReport report = verify_fiducial(it->second, tolerance);
  if (!report.is_design) {
    throw InvalidInput("stored fiducial for d = " + std::to_string(dim) +
                       " fails verification (excess " + std::to_string(report.excess) + ")");
  }
  return FiducialResult{it->second, report, -1, 0};
}

}  // namespace usdcert
