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


#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "usdcert/certifier.hpp"
#include "usdcert/error.hpp"
#include "usdcert/fiducial.hpp"
#include "usdcert/harness.hpp"
#include "usdcert/rng.hpp"
#include "usdcert/wire.hpp"

namespace usdcert::cli {

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const SearchFailed*>(&e)) return kExitSearchFailed;
  if (dynamic_cast<const InvalidInput*>(&e)) return kExitInvalidInput;
  if (dynamic_cast<const DomainError*>(&e)) return kExitDomainError;
  if (dynamic_cast<const InsufficientStatistics*>(&e)) return kExitInsufficientStatistics;
  if (dynamic_cast<const DeviceUnavailable*>(&e) || dynamic_cast<const ProtocolError*>(&e)) {
    return kExitDeviceUnavailable;
  }
  return kExitFailure;
}

std::string fiducial_path(const CommonOptions& common) {
  if (!common.fiducials.empty()) return common.fiducials;
  if (const char* env = std::getenv("USDCERT_FIDUCIALS"); env && *env) return env;
  return USDCERT_DEFAULT_FIDUCIALS;
}

namespace {

constexpr int kMaxTurbulenceDim = 5;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

void validate_dim(int d) {
  require(d >= kMinFiducialDim && d <= kMaxFiducialDim,
          "dimension must lie in 2..16, got " + std::to_string(d));
}

void validate_epsilon(double eps) {
  if (!(eps >= 0.0 && eps < 0.5)) {
    throw DomainError("error rate must satisfy 0 <= epsilon < 1/2, got " + format_double(eps));
  }
}

Schedule parse_schedule(const std::string& s) {
  if (s == "stratified") return Schedule::kStratified;
  if (s == "uniform") return Schedule::kUniform;
  throw InvalidInput("schedule must be 'stratified' or 'uniform', got '" + s + "'");
}

std::vector<Cell> record_row(const ResultRecord& r) {
  return {static_cast<std::int64_t>(r.d), static_cast<std::int64_t>(r.n), static_cast<std::int64_t>(r.t),
          r.s_value, r.sigma, r.bound, r.z, r.certified,
          r.epsilon ? Cell(*r.epsilon) : Cell(), r.seed, r.shots};
}

const std::vector<std::string> kRecordColumns = {"d", "N", "t", "S_value", "sigma", "bound",
                                                 "z", "certified", "epsilon", "seed", "shots"};

struct SampledRun {
  std::vector<PairStats> pairs;
  std::uint64_t rounds = 0;
};

/// Runs the referee against simulated or remote devices and folds the rounds into pair counts.
SampledRun sample_pairs(const StateEnsemble& ensemble, const CertificationRun& run, double epsilon,
                        Schedule schedule, const std::string& wire_prep, const std::string& wire_meas,
                        std::chrono::milliseconds timeout, std::ostream* transcript) {
  const auto seeds = split_seeds(run.seed);
  std::unique_ptr<PreparationDevice> prep;
  std::unique_ptr<MeasurementDevice> meas;
  if (wire_prep.empty()) {
    prep = std::make_unique<SimulatedPreparer>(ensemble, seeds.preparer);
  } else {
    prep = wire_connect_preparer(Endpoint::parse(wire_prep), run.d, run.n, timeout);
  }
  if (wire_meas.empty()) {
    meas = std::make_unique<SimulatedMeasurer>(ensemble, seeds.measurer, ErrorModel(epsilon));
  } else {
    meas = wire_connect_measurer(Endpoint::parse(wire_meas), run.d, timeout);
  }

  PairStatsAccumulator acc(run.n);
  if (transcript) write_transcript_csv_header(*transcript);
  const auto summary = run_protocol(
      *prep, *meas, run,
      [&](const RoundRecord& r) {
        acc.add(r);
        if (transcript) write_transcript_csv_row(*transcript, r, run.seed);
      },
      schedule);
  if (summary.truncated) {
    throw DeviceUnavailable("protocol stopped after " + std::to_string(summary.rounds) +
                            " rounds: " + summary.failure);
  }
  return {acc.finish(), summary.rounds};
}

Verdict certify_one(const StateEnsemble& ensemble, const CertificationRun& run, bool exact, double epsilon,
                    double k_sigma, int resamples, Schedule schedule, const std::string& wire_prep,
                    const std::string& wire_meas, std::chrono::milliseconds timeout, std::ostream* transcript,
                    std::vector<std::string>& notes) {
  std::vector<PairStats> pairs;
  if (exact) {
    pairs = exact_pair_stats(ensemble, ErrorModel(epsilon));
  } else {
    pairs = sample_pairs(ensemble, run, epsilon, schedule, wire_prep, wire_meas, timeout, transcript).pairs;
  }
  const auto stat = s_t(pairs, run.t, {resamples, derive_seed(run.seed, "bootstrap")});
  if (stat.bootstrap_warning) notes.push_back("warning: more than 1% of bootstrap resamples were redrawn");
  return verdict(stat, run.d, static_cast<std::size_t>(run.n), run.t, k_sigma);
}

std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidInput("cannot open output file " + p.string());
  return f;
}

}  // namespace

StateEnsemble sic_ensemble(int d, const CommonOptions& common, bool fresh_search, std::string* source) {
  validate_dim(d);
  if (!fresh_search) {
    const auto path = fiducial_path(common);
    if (std::filesystem::exists(path)) {
      if (auto loaded = load_verified_fiducial(path, d)) {
        if (source) *source = "file";
        return wh_orbit(loaded->fiducial);
      }
    }
  }
  if (source) *source = "search";
  return wh_orbit(find_sic_fiducial(d, {}, derive_seed(common.seed, "fiducial")).fiducial);
}

CommandOutput run_fiducial(const FiducialCommand& cmd, const CommonOptions& common, std::ostream& log) {
  std::vector<int> dims = cmd.dims;
  if (cmd.all) {
    dims.clear();
    for (int d = kMinFiducialDim; d <= kMaxFiducialDim; ++d) dims.push_back(d);
  }
  require(!dims.empty(), "fiducial needs --dim or --all");
  for (int d : dims) validate_dim(d);
  FiducialSearchConfig config;
  config.restarts = cmd.restarts;
  config.max_iterations = cmd.max_iterations;
  config.tolerance = cmd.tolerance;
  if (cmd.step == "lbfgs") {
    config.step_rule = StepRule::kLbfgs;
  } else if (cmd.step == "steepest") {
    config.step_rule = StepRule::kSteepestDescent;
  } else {
    throw InvalidInput("step rule must be 'lbfgs' or 'steepest', got '" + cmd.step + "'");
  }
  config.validate();

  const auto path = fiducial_path(common);
  CommandOutput result;
  result.meta.command = "fiducial";
  result.meta.seed = common.seed;
  result.meta.params = {{"dims", dims},         {"verify_only", cmd.verify_only},
                        {"restarts", cmd.restarts}, {"max_iterations", cmd.max_iterations},
                        {"step", cmd.step},     {"tolerance", cmd.tolerance},
                        {"file", path}};
  result.table.columns = {"d", "frame_potential", "sic_value", "excess", "is_design", "source", "restart",
                          "iterations"};

  FiducialTable table;
  if (!cmd.verify_only && std::filesystem::exists(path)) table = read_fiducial_file(path);
  bool updated = false;
  for (int d : dims) {
    const double sic_value = 2.0 * d * d * d / (d + 1.0);
    if (cmd.verify_only) {
      const auto loaded = load_verified_fiducial(path, d, cmd.tolerance);
      if (!loaded) throw InvalidInput("fiducial file " + path + " has no record for d = " + std::to_string(d));
      result.table.add_row({static_cast<std::int64_t>(d), loaded->report.frame_potential, sic_value,
                            loaded->report.excess, loaded->report.is_design, std::string("file"), Cell(), Cell()});
      continue;
    }
    try {
      const auto found = find_sic_fiducial(d, config, derive_seed(common.seed, static_cast<std::uint64_t>(d)));
      table.insert_or_assign(d, found.fiducial);
      updated = true;
      result.table.add_row({static_cast<std::int64_t>(d), found.report.frame_potential, sic_value,
                            found.report.excess, found.report.is_design, std::string("search"),
                            static_cast<std::int64_t>(found.restart), static_cast<std::int64_t>(found.iterations)});
      log << "d=" << d << " frame potential " << format_double(found.report.frame_potential) << " vs "
          << format_double(sic_value) << " (excess " << format_double(found.report.excess) << ")\n";
    } catch (const SearchFailed& e) {
      log << "error: " << e.what() << '\n';
      result.meta.notes.push_back("search failed d=" + std::to_string(d) +
                                  " best_excess=" + format_double(e.best_excess()));
      result.status = kExitSearchFailed;
    }
  }
  if (updated) {
    if (std::filesystem::path(path).has_parent_path()) {
      std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    }
    write_fiducial_file(path, table);
  }
  return result;
}

CommandOutput run_certify(const CertifyCommand& cmd, const CommonOptions& common, std::ostream& log) {
  validate_dim(cmd.dim);
  auto run = CertificationRun::sic_family(cmd.dim, cmd.shots, common.seed);
  run.t = cmd.t;
  run.validate();
  require(cmd.exact || cmd.shots > 0, "shots must be positive");
  require(cmd.k_sigma > 0.0, "k-sigma must be positive");
  require(cmd.resamples >= 100, "bootstrap needs at least 100 resamples");
  require(cmd.timeout_ms > 0, "timeout must be positive");
  require(!(cmd.exact && (!cmd.wire_prep.empty() || !cmd.wire_meas.empty())),
          "--exact does not run the devices; drop the --wire options");
  validate_epsilon(cmd.epsilon);
  const auto schedule = parse_schedule(cmd.schedule);

  std::string source;
  const auto ensemble = sic_ensemble(cmd.dim, common, cmd.fresh_search, &source);

  CommandOutput result;
  result.meta.command = "certify";
  result.meta.seed = common.seed;
  result.meta.params = {{"dim", cmd.dim},           {"N", run.n},
                        {"t", cmd.t},               {"mode", cmd.exact ? "exact" : "sampled"},
                        {"shots", cmd.shots},       {"epsilon", cmd.epsilon},
                        {"k_sigma", cmd.k_sigma},   {"resamples", cmd.resamples},
                        {"schedule", cmd.schedule}, {"fiducial_source", source}};
  if (!cmd.wire_prep.empty()) result.meta.params.emplace_back("wire_prep", cmd.wire_prep);
  if (!cmd.wire_meas.empty()) result.meta.params.emplace_back("wire_meas", cmd.wire_meas);

  std::optional<std::ofstream> transcript;
  if (!cmd.transcript.empty()) {
    const auto p = resolve_output(cmd.transcript, "transcript", common.seed, Format::kCsv);
    transcript = open_output(*p);
  }
  const auto v = certify_one(ensemble, run, cmd.exact, cmd.epsilon, cmd.k_sigma, cmd.resamples, schedule,
                             cmd.wire_prep, cmd.wire_meas, std::chrono::milliseconds(cmd.timeout_ms),
                             transcript ? &*transcript : nullptr, result.meta.notes);
  auto record = ResultRecord::from_verdict(v, run, cmd.exact);
  record.epsilon = cmd.epsilon;
  result.table.columns = kRecordColumns;
  result.table.add_row(record_row(record));
  log << "S_" << cmd.t << " = " << format_double(record.s_value) << " +- " << format_double(record.sigma)
      << ", bound " << format_double(record.bound) << ", z = " << format_double(record.z)
      << (record.certified ? ", certified" : ", not certified") << '\n';
  if (cmd.require_certified && !record.certified) result.status = kExitNotCertified;
  return result;
}

CommandOutput run_sweep_dims(const SweepCommand& cmd, const CommonOptions& common, std::ostream& log) {
  require(cmd.dim_min <= cmd.dim_max,
          "empty dimension range " + std::to_string(cmd.dim_min) + ".." + std::to_string(cmd.dim_max));
  validate_dim(cmd.dim_min);
  validate_dim(cmd.dim_max);
  require(cmd.t >= 1, "order t must be >= 1");
  require(cmd.exact || cmd.shots > 0, "shots must be positive");
  require(cmd.k_sigma > 0.0, "k-sigma must be positive");
  require(cmd.resamples >= 100, "bootstrap needs at least 100 resamples");

  CommandOutput result;
  result.meta.command = "sweep-dims";
  result.meta.seed = common.seed;
  result.meta.params = {{"dim_min", cmd.dim_min}, {"dim_max", cmd.dim_max}, {"t", cmd.t},
                        {"mode", cmd.exact ? "exact" : "sampled"}, {"shots", cmd.shots},
                        {"k_sigma", cmd.k_sigma}, {"resamples", cmd.resamples}};
  result.table.columns = {"d", "N", "S", "sigma", "bound", "z", "certified", "seed"};
  bool all_certified = true;
  for (int d = cmd.dim_min; d <= cmd.dim_max; ++d) {
    const auto seed = derive_seed(common.seed, static_cast<std::uint64_t>(d));
    try {
      auto run = CertificationRun::sic_family(d, cmd.shots, seed);
      run.t = cmd.t;
      CommonOptions per_dim = common;
      per_dim.seed = seed;
      const auto ensemble = sic_ensemble(d, per_dim, cmd.fresh_search, nullptr);
      const auto v = certify_one(ensemble, run, cmd.exact, 0.0, cmd.k_sigma, cmd.resamples, Schedule::kStratified,
                                 "", "", kDefaultWireTimeout, nullptr, result.meta.notes);
      all_certified = all_certified && v.certified;
      result.table.add_row({static_cast<std::int64_t>(d), static_cast<std::int64_t>(run.n), v.statistic.value,
                            v.statistic.sigma, v.bound, v.z_score, v.certified, seed});
      log << "d=" << d << " S=" << format_double(v.statistic.value) << " bound=" << format_double(v.bound)
          << " z=" << format_double(v.z_score) << '\n';
    } catch (const std::exception& e) {
      log << "error: d=" << d << ": " << e.what() << '\n';
      result.meta.notes.push_back("error d=" + std::to_string(d) + ": " + e.what());
      if (result.status == kExitOk) result.status = exit_code_for(e);
    }
  }
  if (result.status == kExitOk && cmd.require_certified && !all_certified) result.status = kExitNotCertified;
  return result;
}

CommandOutput run_turbulence(const TurbulenceCommand& cmd, const CommonOptions& common, std::ostream& log) {
  validate_dim(cmd.dim);
  require(cmd.dim <= kMaxTurbulenceDim || cmd.allow_high_dim,
          "turbulence runs default to d <= 5; pass --allow-high-dim for d = " + std::to_string(cmd.dim));
  require(cmd.w_grid.empty() != cmd.eps_grid.empty(), "give exactly one of --w-grid or --eps-grid");
  require(cmd.t >= 1, "order t must be >= 1");
  require(cmd.exact || cmd.shots > 0, "shots must be positive");
  require(cmd.realizations >= 1, "realizations must be >= 1");
  require(cmd.resamples >= 100, "bootstrap needs at least 100 resamples");
  for (double w : cmd.w_grid) require(w >= 0.0 && std::isfinite(w), "W values must be finite and >= 0");
  for (double e : cmd.eps_grid) validate_epsilon(e);
  const auto grid = GridSpec::for_waist(cmd.w0, cmd.grid_n);
  if (!cmd.w_grid.empty()) grid.validate(cmd.w0);

  std::string source;
  const auto ensemble = sic_ensemble(cmd.dim, common, cmd.fresh_search, &source);
  const auto ideal = exact_pair_stats(ensemble);
  const auto ells = embedding_modes(cmd.dim);

  CommandOutput result;
  result.meta.command = "turbulence";
  result.meta.seed = common.seed;
  result.meta.params = {{"dim", cmd.dim},
                        {"t", cmd.t},
                        {"mode", cmd.exact ? "exact" : "sampled"},
                        {"shots", cmd.shots},
                        {"realizations", cmd.realizations},
                        {"grid_n", cmd.grid_n},
                        {"w0", cmd.w0},
                        {"resamples", cmd.resamples},
                        {"fiducial_source", source}};
  if (!cmd.w_grid.empty()) result.meta.params.emplace_back("w_grid", cmd.w_grid);
  if (!cmd.eps_grid.empty()) result.meta.params.emplace_back("eps_grid", cmd.eps_grid);
  result.table.columns = {"W", "epsilon", "epsilon_se", "S_eps", "sigma", "prediction", "prediction_noisy"};

  const bool from_w = !cmd.w_grid.empty();
  const auto& points = from_w ? cmd.w_grid : cmd.eps_grid;
  // Every W reuses the same screen seeds so the sweep compares like with like.
  const auto screen_seed = derive_seed(common.seed, "screens");
  for (std::size_t i = 0; i < points.size(); ++i) {
    Cell w_cell;
    try {
      double eps = points[i];
      double eps_se = 0.0;
      if (from_w) {
        w_cell = points[i];
        const auto est = error_rate_from_turbulence(ensemble, ells, grid, points[i], cmd.realizations, screen_seed,
                                                    {cmd.w0, static_cast<double>(cmd.shots)});
        eps = est.epsilon;
        eps_se = est.std_error;
      }
      const auto point_seed = derive_seed(common.seed, static_cast<std::uint64_t>(i));
      auto run = CertificationRun::sic_family(cmd.dim, cmd.shots, point_seed);
      run.t = cmd.t;
      std::vector<PairStats> pairs;
      if (cmd.exact) {
        pairs = exact_pair_stats(ensemble, ErrorModel(eps));
      } else {
        pairs = sample_pairs(ensemble, run, eps, Schedule::kStratified, "", "", kDefaultWireTimeout, nullptr).pairs;
      }
      const auto stat = s_eps(pairs, eps, cmd.t, {cmd.resamples, derive_seed(point_seed, "bootstrap")});
      const double prediction = s_eps(ideal, eps, cmd.t).value;
      const double prediction_noisy = s_eps(exact_pair_stats(ensemble, ErrorModel(eps)), eps, cmd.t).value;
      result.table.add_row({w_cell, eps, eps_se, stat.value, stat.sigma, prediction, prediction_noisy});
      log << (from_w ? "W=" + format_double(points[i]) + " " : "") << "eps=" << format_double(eps)
          << " S_eps=" << format_double(stat.value) << '\n';
    } catch (const std::exception& e) {
      log << "error: point " << i << ": " << e.what() << '\n';
      result.meta.notes.push_back("error at grid point " + std::to_string(i) + ": " + e.what());
      result.table.add_row({w_cell, Cell(), Cell(), Cell(), Cell(), Cell(), Cell()});
      if (result.status == kExitOk) result.status = exit_code_for(e);
    }
  }
  return result;
}

CommandOutput run_crosstalk(const CrosstalkCommand& cmd, const CommonOptions& common, std::ostream& log) {
  require(cmd.ell_min <= cmd.ell_max, "empty OAM range");
  require(cmd.realizations >= 1, "realizations must be >= 1");
  require(cmd.w >= 0.0 && std::isfinite(cmd.w), "W must be finite and >= 0");
  for (double w : cmd.w_grid) require(w >= 0.0 && std::isfinite(w), "W values must be finite and >= 0");
  const auto grid = GridSpec::for_waist(cmd.w0, cmd.grid_n);
  grid.validate(cmd.w0);

  std::vector<int> ells;
  for (int l = cmd.ell_min; l <= cmd.ell_max; ++l) ells.push_back(l);
  const auto modes = lg_modes(ells, cmd.w0);
  const auto ideal = ideal_crosstalk(ells);
  const auto screen_seed = derive_seed(common.seed, "screens");

  CommandOutput result;
  result.meta.command = "crosstalk";
  result.meta.seed = common.seed;
  result.meta.params = {{"ell_min", cmd.ell_min},   {"ell_max", cmd.ell_max}, {"realizations", cmd.realizations},
                        {"grid_n", cmd.grid_n},     {"w0", cmd.w0},           {"normalize", cmd.normalize}};

  if (!cmd.w_grid.empty()) {
    require(cmd.batches >= 2 && cmd.batches <= cmd.realizations, "batches must lie in 2..realizations");
    result.meta.params.emplace_back("w_grid", cmd.w_grid);
    result.meta.params.emplace_back("batches", cmd.batches);
    result.table.columns = {"W", "similarity", "similarity_se"};
    for (double w : cmd.w_grid) {
      // Batch means: pooled similarity plus the spread of per-batch similarities.
      const auto m = static_cast<Eigen::Index>(ells.size());
      Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(m, m);
      std::vector<double> batch_sims;
      for (int b = 0; b < cmd.batches; ++b) {
        const int count = cmd.realizations / cmd.batches + (b < cmd.realizations % cmd.batches ? 1 : 0);
        const auto part = crosstalk(modes, grid, w, count, derive_seed(screen_seed, static_cast<std::uint64_t>(b)),
                                    {cmd.normalize});
        pooled += part.entries * count;
        batch_sims.push_back(similarity(part.entries, ideal.entries));
      }
      pooled /= cmd.realizations;
      double mean = 0.0;
      for (double s : batch_sims) mean += s;
      mean /= static_cast<double>(batch_sims.size());
      double var = 0.0;
      for (double s : batch_sims) var += (s - mean) * (s - mean);
      var /= static_cast<double>(batch_sims.size() - 1);
      const double se = std::sqrt(var / static_cast<double>(batch_sims.size()));
      const double sim = similarity(pooled, ideal.entries);
      result.table.add_row({w, sim, se});
      log << "W=" << format_double(w) << " similarity=" << format_double(sim) << '\n';
    }
    return result;
  }

  result.meta.params.emplace_back("W", cmd.w);
  const auto matrix = crosstalk(modes, grid, cmd.w, cmd.realizations, screen_seed, {cmd.normalize});
  const double sim = similarity(matrix, ideal);
  result.meta.notes.push_back("similarity=" + format_double(sim));
  log << "similarity vs identity: " << format_double(sim) << '\n';
  result.table.columns.push_back("ell_in");
  for (int l : ells) result.table.columns.push_back(std::to_string(l));
  for (std::size_t i = 0; i < ells.size(); ++i) {
    std::vector<Cell> row{static_cast<std::int64_t>(ells[i])};
    for (std::size_t j = 0; j < ells.size(); ++j) {
      row.emplace_back(matrix.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    result.table.add_row(std::move(row));
  }
  result.writer = [meta = result.meta, matrix, sim](std::ostream& out, Format format) {
    if (format == Format::kCsv) {
      write_csv_header(out, meta);
      write_crosstalk_csv(out, matrix);
      return;
    }
    nlohmann::json entries = nlohmann::json::array(), errors = nlohmann::json::array();
    for (Eigen::Index i = 0; i < matrix.entries.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array(), err_row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < matrix.entries.cols(); ++j) {
        row.push_back(matrix.entries(i, j));
        err_row.push_back(matrix.std_error(i, j));
      }
      entries.push_back(std::move(row));
      errors.push_back(std::move(err_row));
    }
    std::vector<double> captured(matrix.ells.size());
    const Eigen::VectorXd power = matrix.captured_power();
    for (std::size_t i = 0; i < captured.size(); ++i) captured[i] = power[static_cast<Eigen::Index>(i)];
    nlohmann::json results{{"ells", matrix.ells},
                           {"entries", entries},
                           {"std_error", errors},
                           {"captured_power", captured},
                           {"similarity", sim},
                           {"realizations", matrix.realizations},
                           {"W", matrix.w},
                           {"seed", matrix.seed},
                           {"normalized", matrix.normalized}};
    out << nlohmann::json{{"meta", meta_json(meta)}, {"results", results}}.dump(2) << '\n';
  };
  return result;
}

int run_serve_device(const ServeCommand& cmd, const CommonOptions& common, std::ostream& log) {
  require(cmd.role == "prep" || cmd.role == "meas", "role must be 'prep' or 'meas', got '" + cmd.role + "'");
  require(cmd.timeout_ms > 0, "timeout must be positive");
  validate_epsilon(cmd.epsilon);
  const auto bind = Endpoint::parse(cmd.listen);
  const auto ensemble = sic_ensemble(cmd.dim, common, cmd.fresh_search, nullptr);
  const auto seeds = split_seeds(common.seed);
  const std::chrono::milliseconds timeout(cmd.timeout_ms);
  std::unique_ptr<WireServer> server;
  if (cmd.role == "prep") {
    server = std::make_unique<WireServer>(std::make_unique<SimulatedPreparer>(ensemble, seeds.preparer), bind, timeout);
  } else {
    server = std::make_unique<WireServer>(
        std::make_unique<SimulatedMeasurer>(ensemble, seeds.measurer, ErrorModel(cmd.epsilon)), bind, timeout);
  }
  log << "listening on " << bind.host << ':' << server->port() << std::endl;
  server->serve(cmd.sessions);
  return kExitOk;
}

}  // namespace usdcert::cli
