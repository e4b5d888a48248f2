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

#include "usdcert/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include <fftw3.h>

#include "usdcert/error.hpp"
#include "usdcert/parallel.hpp"
#include "usdcert/rng.hpp"
#include "usdcert/usd.hpp"

namespace usdcert {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int frequency_index(int i, int n) { return i < n / 2 ? i : i - n; }

// Columns are the flattened mode fields.
Eigen::MatrixXcd stack_fields(std::span<const LgMode> modes, const GridSpec& grid) {
  const Eigen::Index pixels = static_cast<Eigen::Index>(grid.n) * grid.n;
  Eigen::MatrixXcd u(pixels, static_cast<Eigen::Index>(modes.size()));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const Field f = lg_field(modes[m], grid);
    u.col(static_cast<Eigen::Index>(m)) = Eigen::Map<const Eigen::VectorXcd>(f.data(), pixels);
  }
  return u;
}

// T(b, a) = <u_b| exp(i phase) |u_a>.
Eigen::MatrixXcd transfer_matrix(const Eigen::MatrixXcd& u, const PhaseScreen& screen) {
  if (screen.w == 0.0) return u.adjoint() * u;
  const Eigen::Index pixels = u.rows();
  Eigen::VectorXcd h(pixels);
  const double* ph = screen.phase.data();
  for (Eigen::Index p = 0; p < pixels; ++p) h[p] = std::polar(1.0, ph[p]);
  return u.adjoint() * (h.asDiagonal() * u);
}

double strength_to_r0(double w, double w0) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("scintillation strength W must be >= 0");
  return w == 0.0 ? std::numeric_limits<double>::infinity() : w0 / w;
}

}  // namespace

void GridSpec::validate(double w0) const {
  if (n < 128 || !is_power_of_two(n)) {
    throw InvalidInput("grid size must be a power of two >= 128, got " + std::to_string(n));
  }
  if (!(extent > 0.0)) throw InvalidInput("grid extent must be positive");
  if (!(w0 > 0.0)) throw InvalidInput("beam waist must be positive");
  if (w0 / pitch() < 16.0) {
    throw InvalidInput("grid under-resolves the beam: " + std::to_string(w0 / pitch()) +
                       " samples per waist, need at least 16");
  }
}

Field lg_field(const LgMode& mode, const GridSpec& grid) {
  grid.validate(mode.w0);
  const int n = grid.n;
  const int order = std::abs(mode.ell);
  Field u(n, n);
  for (int j = 0; j < n; ++j) {
    const double y = grid.coordinate(j);
    for (int i = 0; i < n; ++i) {
      const double x = grid.coordinate(i);
      const double r2 = x * x + y * y;
      const double radial = std::pow(std::sqrt(2.0 * r2) / mode.w0, order) * std::exp(-r2 / (mode.w0 * mode.w0));
      u(i, j) = std::polar(radial, mode.ell * std::atan2(y, x));
    }
  }
  u /= u.norm();
  return u;
}

PhaseScreen kolmogorov_screen(const GridSpec& grid, double r0, std::uint64_t seed, double w0,
                              int subharmonic_levels) {
  grid.validate(w0);
  if (!(r0 > 0.0)) throw InvalidInput("Fried parameter r0 must be positive");
  if (subharmonic_levels < 0 || subharmonic_levels > 8) throw InvalidInput("subharmonic levels must be in [0, 8]");
  const int n = grid.n;
  PhaseScreen screen;
  screen.r0 = r0;
  screen.w = std::isinf(r0) ? 0.0 : w0 / r0;
  screen.seed = seed;
  screen.phase = Eigen::MatrixXd::Zero(n, n);
  if (std::isinf(r0)) return screen;

  const double df = 1.0 / grid.extent;
  const double psd_scale = 0.023 * std::pow(r0, -5.0 / 3.0);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;

  // Row-major n x n buffers as FFTW expects; element (i, j) at i * n + j.
  std::vector<Complex> raw(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double fx = frequency_index(i, n) * df;
    for (int j = 0; j < n; ++j) {
      const double fy = frequency_index(j, n) * df;
      const double f2 = fx * fx + fy * fy;
      const double a = normal(rng);
      const double b = normal(rng);
      const double sigma = f2 > 0.0 ? std::sqrt(psd_scale * std::pow(f2, -11.0 / 6.0)) * df : 0.0;
      raw[static_cast<std::size_t>(i) * n + j] = sigma * Complex(a, b) * kInvSqrt2;
    }
  }
  // Hermitian symmetrization c'(k) = (c(k) + conj(c(-k))) / sqrt2 keeps the
  // per-bin variance and makes the inverse transform real.
  std::vector<Complex> spectrum(raw.size());
  for (int i = 0; i < n; ++i) {
    const int mi = (n - i) % n;
    for (int j = 0; j < n; ++j) {
      const int mj = (n - j) % n;
      spectrum[static_cast<std::size_t>(i) * n + j] =
          (raw[static_cast<std::size_t>(i) * n + j] + std::conj(raw[static_cast<std::size_t>(mi) * n + mj])) *
          kInvSqrt2;
    }
  }
  std::vector<Complex> out(raw.size());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(spectrum.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Complex v = out[static_cast<std::size_t>(i) * n + j];
      screen.phase(i, j) = v.real();
      screen.imaginary_residual = std::max(screen.imaginary_residual, std::abs(v.imag()));
    }
  }
  // Drawn after the FFT bins so the plain part matches the unaugmented screen.
  std::vector<Complex> ex(static_cast<std::size_t>(n));
  std::vector<Complex> ey(static_cast<std::size_t>(n));
  for (int level = 1; level <= subharmonic_levels; ++level) {
    const double dfl = df / std::pow(3.0, level);
    for (int p = -1; p <= 1; ++p) {
      for (int q = -1; q <= 1; ++q) {
        if (p == 0 && q == 0) continue;
        const double fx = p * dfl;
        const double fy = q * dfl;
        const double sigma = std::sqrt(psd_scale * std::pow(fx * fx + fy * fy, -11.0 / 6.0)) * dfl;
        const double a = normal(rng);
        const double b = normal(rng);
        const Complex c = sigma * Complex(a, b);
        for (int k = 0; k < n; ++k) {
          ex[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * fx * grid.coordinate(k));
          ey[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * fy * grid.coordinate(k));
        }
        for (int i = 0; i < n; ++i) {
          const Complex ci = c * ex[static_cast<std::size_t>(i)];
          for (int j = 0; j < n; ++j) screen.phase(i, j) += (ci * ey[static_cast<std::size_t>(j)]).real();
        }
      }
    }
  }
  screen.phase.array() -= screen.phase.mean();
  return screen;
}

PhaseScreen screen_for_strength(const GridSpec& grid, double w, std::uint64_t seed, double w0) {
  return kolmogorov_screen(grid, strength_to_r0(w, w0), seed, w0);
}

double structure_function(const PhaseScreen& screen, int lag) {
  const auto n = static_cast<int>(screen.phase.rows());
  if (lag < 1 || lag >= n) throw InvalidInput("structure function lag out of range");
  const auto& p = screen.phase;
  const auto m = n - lag;
  const double dx = (p.bottomRows(m) - p.topRows(m)).squaredNorm() / (static_cast<double>(m) * n);
  const double dy = (p.rightCols(m) - p.leftCols(m)).squaredNorm() / (static_cast<double>(m) * n);
  return 0.5 * (dx + dy);
}

double kolmogorov_structure_function(double r, double r0) { return 6.88 * std::pow(r / r0, 5.0 / 3.0); }

std::vector<int> embedding_modes(int d) {
  if (d < 2) throw InvalidInput("embedding needs d >= 2");
  std::vector<int> ells(d);
  for (int k = 0; k < d; ++k) ells[k] = k - d / 2;
  return ells;
}

std::vector<LgMode> lg_modes(std::span<const int> ells, double w0) {
  std::vector<LgMode> modes;
  modes.reserve(ells.size());
  for (int l : ells) modes.push_back({l, w0});
  return modes;
}

CrosstalkMatrix crosstalk(std::span<const LgMode> modes, const GridSpec& grid, double w,
                          int realizations, std::uint64_t seed, const CrosstalkOptions& options) {
  if (modes.empty()) throw InvalidInput("crosstalk needs at least one mode");
  if (realizations < 1) throw InvalidInput("crosstalk needs at least one realization");
  const double w0 = modes.front().w0;
  for (const auto& m : modes) {
    if (m.w0 != w0) throw InvalidInput("crosstalk modes must share one beam waist");
  }
  const double r0 = strength_to_r0(w, w0);
  const Eigen::MatrixXcd u = stack_fields(modes, grid);
  const auto m = static_cast<Eigen::Index>(modes.size());

  const auto count = static_cast<std::size_t>(realizations);
  std::vector<Eigen::MatrixXd> samples(count);
  parallel_for(count, [&](std::size_t r) {
    const auto screen = kolmogorov_screen(grid, r0, derive_seed(seed, static_cast<std::uint64_t>(r)), w0);
    samples[r] = transfer_matrix(u, screen).cwiseAbs2().transpose();  // (input, detected)
  });

  CrosstalkMatrix result;
  result.ells.reserve(modes.size());
  for (const auto& mode : modes) result.ells.push_back(mode.ell);
  result.realizations = realizations;
  result.w = w;
  result.seed = seed;
  result.entries = Eigen::MatrixXd::Zero(m, m);
  result.std_error = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      CompensatedSum sum;
      for (const auto& s : samples) sum.add(s(i, j));
      const double mean = sum.value() / static_cast<double>(count);
      CompensatedSum var;
      for (const auto& s : samples) var.add((s(i, j) - mean) * (s(i, j) - mean));
      result.entries(i, j) = mean;
      if (count > 1) result.std_error(i, j) = std::sqrt(var.value() / static_cast<double>(count - 1) / static_cast<double>(count));
    }
  }
  if (options.normalize_rows) {
    const Eigen::VectorXd captured = result.captured_power();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (captured[i] > 0.0) {
        result.entries.row(i) /= captured[i];
        result.std_error.row(i) /= captured[i];
      }
    }
    result.normalized = true;
  }
  return result;
}

CrosstalkMatrix ideal_crosstalk(std::span<const int> ells) {
  CrosstalkMatrix c;
  c.ells.assign(ells.begin(), ells.end());
  const auto m = static_cast<Eigen::Index>(ells.size());
  c.entries = Eigen::MatrixXd::Identity(m, m);
  c.std_error = Eigen::MatrixXd::Zero(m, m);
  c.realizations = 1;
  return c;
}

double similarity(const Eigen::MatrixXd& measured, const Eigen::MatrixXd& ideal) {
  if (measured.rows() != ideal.rows() || measured.cols() != ideal.cols()) {
    throw InvalidInput("similarity: matrix shapes differ");
  }
  if ((measured.array() < 0.0).any() || (ideal.array() < 0.0).any()) {
    throw InvalidInput("similarity: entries must be nonnegative");
  }
  const double sum_m = measured.sum();
  const double sum_i = ideal.sum();
  if (sum_m == 0.0 || sum_i == 0.0) throw InvalidInput("similarity: all-zero matrix");
  const double cross = (measured.array() * ideal.array()).sqrt().sum();
  return std::min(1.0, cross * cross / (sum_m * sum_i));  // rounding can exceed the Cauchy-Schwarz limit
}

double similarity(const CrosstalkMatrix& measured, const CrosstalkMatrix& ideal) {
  if (measured.ells != ideal.ells) throw InvalidInput("similarity: mode lists differ");
  return similarity(measured.entries, ideal.entries);
}

void write_crosstalk_csv(std::ostream& out, const CrosstalkMatrix& matrix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", matrix.w);
  out << "# realizations=" << matrix.realizations << " W=" << buf << " seed=" << matrix.seed
      << " normalized=" << (matrix.normalized ? 1 : 0) << '\n';
  out << "ell_in";
  for (int l : matrix.ells) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < matrix.ells.size(); ++i) {
    out << matrix.ells[i];
    for (std::size_t j = 0; j < matrix.ells.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g",
                    matrix.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << ',' << buf;
    }
    out << '\n';
  }
}

ErrorRateEstimate error_rate_from_turbulence(const StateEnsemble& ensemble, std::span<const int> ells,
                                             const GridSpec& grid, double w, int realizations,
                                             std::uint64_t seed, const ErrorRateOptions& options) {
  const int d = ensemble.dim();
  if (static_cast<int>(ells.size()) < d) {
    throw InvalidInput("need at least " + std::to_string(d) + " embedding modes, got " +
                       std::to_string(ells.size()));
  }
  if (realizations < 1) throw InvalidInput("error-rate estimate needs at least one realization");
  if (!(options.shots_per_setting > 0.0)) throw InvalidInput("shots_per_setting must be positive");
  const double r0 = strength_to_r0(w, options.w0);

  const auto modes = lg_modes(ells.first(static_cast<std::size_t>(d)), options.w0);
  const Eigen::MatrixXcd u = stack_fields(modes, grid);

  struct PairMeasurement {
    std::size_t a, b;
    UsdPovm povm;
  };
  std::vector<PairMeasurement> pairs;
  for (std::size_t a = 0; a < ensemble.size(); ++a) {
    for (std::size_t b = a + 1; b < ensemble.size(); ++b) {
      pairs.push_back({a, b, build_usd_povm(ensemble[a], ensemble[b])});
    }
  }

  const auto count = static_cast<std::size_t>(realizations);
  std::vector<double> wrong(count), conclusive(count);
  parallel_for(count, [&](std::size_t r) {
    const auto screen =
        kolmogorov_screen(grid, r0, derive_seed(seed, static_cast<std::uint64_t>(r)), options.w0);
    const Eigen::MatrixXcd t = transfer_matrix(u, screen);
    std::vector<Amplitudes> received(ensemble.size());
    for (std::size_t x = 0; x < ensemble.size(); ++x) received[x] = t * ensemble[x].amplitudes();
    CompensatedSum w_sum, c_sum;
    for (const auto& p : pairs) {
      const auto p1 = p.povm.probabilities(received[p.a]);
      const auto p2 = p.povm.probabilities(received[p.b]);
      w_sum.add(p1.second);
      w_sum.add(p2.first);
      c_sum.add(p1.first + p1.second);
      c_sum.add(p2.first + p2.second);
    }
    wrong[r] = w_sum.value();
    conclusive[r] = c_sum.value();
  });

  CompensatedSum w_total, c_total;
  for (std::size_t r = 0; r < count; ++r) {
    w_total.add(wrong[r]);
    c_total.add(conclusive[r]);
  }
  ErrorRateEstimate est;
  est.realizations = realizations;
  est.conclusive_events = c_total.value() * options.shots_per_setting;
  if (est.conclusive_events < 100.0) {
    throw InsufficientStatistics("only " + std::to_string(est.conclusive_events) +
                                 " expected conclusive events at W = " + std::to_string(w));
  }
  est.epsilon = w_total.value() / c_total.value();
  if (count > 1) {
    const double mean_c = c_total.value() / static_cast<double>(count);
    CompensatedSum resid;
    for (std::size_t r = 0; r < count; ++r) {
      const double e = wrong[r] - est.epsilon * conclusive[r];
      resid.add(e * e);
    }
    est.std_error = std::sqrt(resid.value() / (static_cast<double>(count) * static_cast<double>(count - 1))) / mean_c;
  }
  return est;
}

}  // namespace usdcert
