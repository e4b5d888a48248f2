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


#ifndef USDCERT_TOOLS_COMMANDS_HPP
#define USDCERT_TOOLS_COMMANDS_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "output.hpp"
#include "usdcert/qudit.hpp"
#include "usdcert/turbulence.hpp"

namespace usdcert::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalidInput = 2,
  kExitDomainError = 3,
  kExitSearchFailed = 4,
  kExitInsufficientStatistics = 5,
  kExitDeviceUnavailable = 6,
  kExitNotCertified = 7,
};

/// Maps a library exception to the command exit code.
int exit_code_for(const std::exception& e) noexcept;

struct CommonOptions {
  std::uint64_t seed = 1;
  Format format = Format::kCsv;
  std::string out;        ///< "" = default location, "-" = stdout
  std::string fiducials;  ///< "" = USDCERT_FIDUCIALS or the built-in path
  std::string config;     ///< key = value defaults, already expanded into arguments
};

/// Fiducial file the commands read: the flag, then USDCERT_FIDUCIALS, then the built-in default.
std::string fiducial_path(const CommonOptions& common);

/// A finished command: either a table or a custom writer, plus the exit status.
struct CommandOutput {
  Meta meta;
  Table table;
  std::function<void(std::ostream&, Format)> writer;  ///< overrides the table when set
  int status = kExitOk;
};

struct FiducialCommand {
  std::vector<int> dims;
  bool all = false;
  bool verify_only = false;
  int restarts = 20;
  int max_iterations = 5000;
  std::string step = "lbfgs";
  double tolerance = 1e-8;
};

struct CertifyCommand {
  int dim = 2;
  int t = 2;
  std::uint64_t shots = 10000;
  bool exact = false;
  double epsilon = 0.0;
  std::string wire_prep;
  std::string wire_meas;
  int timeout_ms = 5000;
  bool fresh_search = false;
  bool require_certified = false;
  double k_sigma = 3.0;
  int resamples = 1000;
  std::string schedule = "stratified";
  std::string transcript;
};

struct SweepCommand {
  int dim_min = 2;
  int dim_max = 10;
  int t = 2;
  std::uint64_t shots = 10000;
  bool exact = false;
  bool fresh_search = false;
  bool require_certified = false;
  double k_sigma = 3.0;
  int resamples = 1000;
};

struct TurbulenceCommand {
  int dim = 2;
  int t = 2;
  std::vector<double> w_grid;
  std::vector<double> eps_grid;
  int realizations = 200;
  std::uint64_t shots = 10000;
  bool exact = false;
  bool allow_high_dim = false;
  int grid_n = 512;
  double w0 = kDefaultWaist;
  int resamples = 1000;
  bool fresh_search = false;
};

struct CrosstalkCommand {
  int ell_min = -5;
  int ell_max = 5;
  double w = 0.0;
  std::vector<double> w_grid;  ///< non-empty switches to a similarity sweep
  int realizations = 200;
  int grid_n = 512;
  double w0 = kDefaultWaist;
  bool normalize = false;
  int batches = 10;
};

struct ServeCommand {
  std::string role;
  int dim = 2;
  std::string listen = "127.0.0.1:0";
  double epsilon = 0.0;
  std::size_t sessions = 0;
  int timeout_ms = 5000;
  bool fresh_search = false;
};

/// SIC ensemble for d from the fiducial file, or from a fresh search when
/// requested or when the file has no record for d.
StateEnsemble sic_ensemble(int d, const CommonOptions& common, bool fresh_search, std::string* source);

CommandOutput run_fiducial(const FiducialCommand& cmd, const CommonOptions& common, std::ostream& log);
CommandOutput run_certify(const CertifyCommand& cmd, const CommonOptions& common, std::ostream& log);
CommandOutput run_sweep_dims(const SweepCommand& cmd, const CommonOptions& common, std::ostream& log);
CommandOutput run_turbulence(const TurbulenceCommand& cmd, const CommonOptions& common, std::ostream& log);
CommandOutput run_crosstalk(const CrosstalkCommand& cmd, const CommonOptions& common, std::ostream& log);

/// Blocks serving sessions; announces the bound endpoint on `log` first.
int run_serve_device(const ServeCommand& cmd, const CommonOptions& common, std::ostream& log);

}  // namespace usdcert::cli

#endif  // USDCERT_TOOLS_COMMANDS_HPP
