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

#ifndef USDCERT_TURBULENCE_HPP
#define USDCERT_TURBULENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "usdcert/qudit.hpp"

namespace usdcert {

/// Default beam waist radius in meters (half of a 4260 um Gaussian diameter).
inline constexpr double kDefaultWaist = 2130e-6;

/// Square sampling grid of the transverse plane. Samples sit at
/// (i - n/2 + 1/2) * pitch so the grid is symmetric about the optical axis.
struct GridSpec {
  int n = 512;
  double extent = 8.0 * kDefaultWaist;  ///< side length in meters

  double pitch() const noexcept { return extent / n; }
  double coordinate(int i) const noexcept { return (i - n / 2 + 0.5) * pitch(); }

  /// Requires n >= 128, n a power of two, extent > 0 and at least 16 samples
  /// per beam waist.
  void validate(double w0) const;

  static GridSpec for_waist(double w0, int n = 512) { return {n, 8.0 * w0}; }
};

/// Laguerre-Gaussian mode with radial index 0.
struct LgMode {
  int ell = 0;
  double w0 = kDefaultWaist;
};

using Field = Eigen::MatrixXcd;

/// (r sqrt2 / w0)^|l| exp(-r^2/w0^2) exp(i l phi), scaled so sum |u|^2 = 1.
Field lg_field(const LgMode& mode, const GridSpec& grid);

struct PhaseScreen {
  double r0 = 0.0;  ///< Fried parameter in meters; infinite for no turbulence
  double w = 0.0;   ///< scintillation strength w0 / r0
  Eigen::MatrixXd phase;  ///< radians, zero mean
  std::uint64_t seed = 0;
  double imaginary_residual = 0.0;  ///< largest |Im| left by the inverse transform
};

/// Kolmogorov phase screen by FFT synthesis: a Hermitian-symmetric circular
/// Gaussian spectrum with variance 0.023 r0^{-5/3} f^{-11/3} df^2 per bin
/// (f in cycles per meter), zero DC. Infinite r0 gives a flat screen.
/// `subharmonic_levels` > 0 adds that many 3x3 rings of sub-grid frequencies
/// (spacing df / 3^level) to restore large-scale power; 0 is plain FFT.
PhaseScreen kolmogorov_screen(const GridSpec& grid, double r0, std::uint64_t seed,
                              double w0 = kDefaultWaist, int subharmonic_levels = 0);

/// Screen for scintillation strength W, i.e. r0 = w0 / W.
PhaseScreen screen_for_strength(const GridSpec& grid, double w, std::uint64_t seed,
                                double w0 = kDefaultWaist);

/// Mean of (phase(p + lag) - phase(p))^2 over both grid axes.
double structure_function(const PhaseScreen& screen, int lag);

/// Kolmogorov prediction 6.88 (r / r0)^{5/3}.
double kolmogorov_structure_function(double r, double r0);

/// d consecutive OAM indices starting at -floor(d/2).
std::vector<int> embedding_modes(int d);

std::vector<LgMode> lg_modes(std::span<const int> ells, double w0 = kDefaultWaist);

/// Row i, column j: probability that input mode ells[i] is detected as ells[j].
struct CrosstalkMatrix {
  std::vector<int> ells;
  Eigen::MatrixXd entries;
  Eigen::MatrixXd std_error;  ///< Monte Carlo standard error of each entry
  int realizations = 0;
  double w = 0.0;
  std::uint64_t seed = 0;
  bool normalized = false;

  /// Power of each input mode that lands inside the mode set.
  Eigen::VectorXd captured_power() const { return entries.rowwise().sum(); }
};

struct CrosstalkOptions {
  bool normalize_rows = false;  ///< divide each row by its captured power
};

/// Crosstalk averaged over `realizations` screens of strength W. W = 0
/// bypasses the screen.
CrosstalkMatrix crosstalk(std::span<const LgMode> modes, const GridSpec& grid, double w,
                          int realizations, std::uint64_t seed, const CrosstalkOptions& options = {});

/// Identity crosstalk for the given mode list.
CrosstalkMatrix ideal_crosstalk(std::span<const int> ells);

/// [sum_ij sqrt(A_ij B_ij)]^2 / (sum A * sum B).
double similarity(const Eigen::MatrixXd& measured, const Eigen::MatrixXd& ideal);
double similarity(const CrosstalkMatrix& measured, const CrosstalkMatrix& ideal);

/// CSV with a `#` metadata line, an `ell_in,<ells...>` header and one row per input mode.
void write_crosstalk_csv(std::ostream& out, const CrosstalkMatrix& matrix);

struct ErrorRateOptions {
  double w0 = kDefaultWaist;
  /// Photons per (realization, pair, member) used to judge whether enough
  /// conclusive events survive; fewer than 100 in total is an error.
  double shots_per_setting = 1000.0;
};

struct ErrorRateEstimate {
  double epsilon = 0.0;    ///< wrong conclusive / all conclusive, pooled
  double std_error = 0.0;  ///< ratio-estimator standard error across realizations
  int realizations = 0;
  double conclusive_events = 0.0;  ///< expected count at options.shots_per_setting
};

/// Embeds qudit basis vector k in mode ells[k], sends each ensemble member
/// through screens of strength W, measures every pair with its ideal USD
/// measurement in the mode basis and pools the wrong-conclusive fraction.
ErrorRateEstimate error_rate_from_turbulence(const StateEnsemble& ensemble, std::span<const int> ells,
                                             const GridSpec& grid, double w, int realizations,
                                             std::uint64_t seed, const ErrorRateOptions& options = {});

}  // namespace usdcert

#endif  // USDCERT_TURBULENCE_HPP
