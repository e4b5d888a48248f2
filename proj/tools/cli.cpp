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


#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "usdcert/error.hpp"

namespace usdcert::cli {
namespace {

void add_common(CLI::App* sub, CommonOptions& common) {
  sub->add_option("--config", common.config, "key = value file with option defaults; flags override it");
  sub->add_option("--seed", common.seed, "master seed")->capture_default_str();
  const std::map<std::string, Format> formats{{"csv", Format::kCsv}, {"json", Format::kJson}};
  sub->add_option("--format", common.format, "output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case).description(""))
      ->option_text("csv|json [csv]");
  sub->add_option("--out", common.out, "output file ('-' for stdout; relative paths use USDCERT_OUTPUT_DIR)");
  sub->add_option("--fiducials", common.fiducials, "fiducial file (default: USDCERT_FIDUCIALS or the shipped file)");
}

void emit(const CommandOutput& result, const CommonOptions& common, std::ostream& out, std::ostream& err) {
  const auto path = resolve_output(common.out, result.meta.command, common.seed, common.format);
  auto write = [&](std::ostream& os) {
    if (result.writer) {
      result.writer(os, common.format);
    } else {
      write_table(os, common.format, result.meta, result.table);
    }
  };
  if (!path) {
    write(out);
    return;
  }
  if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
  std::ofstream f(*path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidInput("cannot open output file " + path->string());
  write(f);
  err << "wrote " << path->string() << '\n';
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Option name as written on the command line, without dashes or a value.
std::string flag_name(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return {};
  return arg.substr(2, arg.find('=') == std::string::npos ? std::string::npos : arg.find('=') - 2);
}

/// Expands `--config FILE` into `--key=value` arguments for every key the
/// command line does not already set. Lines before any section header and
/// lines under `[<subcommand>]` apply; other sections are skipped.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  const std::string& subcommand = args.front();
  std::vector<std::string> kept;
  std::string config;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      continue;
    }
    if (const auto name = flag_name(args[i]); !name.empty()) given.insert(name);
    kept.push_back(args[i]);
  }
  if (config.empty()) return kept;
  std::ifstream in(config);
  if (!in) throw InvalidInput("cannot read config file " + config);
  std::string line;
  bool active = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto text = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[' && text.back() == ']') {
      active = trim(std::string_view(text).substr(1, text.size() - 2)) == subcommand;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InvalidInput(config + ":" + std::to_string(lineno) + ": expected key = value");
    if (!active) continue;
    auto key = trim(std::string_view(text).substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value = trim(std::string_view(text).substr(eq + 1));
    value.erase(std::remove_if(value.begin(), value.end(), [](char c) { return c == '"' || c == '\'' || c == '[' || c == ']' || c == ' '; }),
                value.end());
    if (key == "config" || given.count(key)) continue;
    kept.push_back("--" + key + "=" + value);
  }
  return kept;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certification of high-dimensional state ensembles by randomized unambiguous discrimination",
               "usdcert"};
  app.set_version_flag("--version", std::string(USDCERT_VERSION));
  app.require_subcommand(1);

  CommonOptions common;

  FiducialCommand fid;
  auto* fid_cmd = app.add_subcommand("fiducial", "search for or verify SIC fiducials");
  add_common(fid_cmd, common);
  fid_cmd->add_option("--dim", fid.dims, "dimension(s) to process");
  fid_cmd->add_flag("--all", fid.all, "every supported dimension 2..16");
  fid_cmd->add_flag("--verify-only", fid.verify_only, "load and verify the stored fiducial without searching");
  fid_cmd->add_option("--restarts", fid.restarts)->capture_default_str();
  fid_cmd->add_option("--max-iterations", fid.max_iterations)->capture_default_str();
  fid_cmd->add_option("--step", fid.step, "lbfgs | steepest")->capture_default_str();
  fid_cmd->add_option("--tolerance", fid.tolerance, "allowed frame-potential excess")->capture_default_str();

  CertifyCommand cert;
  auto* cert_cmd = app.add_subcommand("certify", "certify the SIC ensemble of one dimension");
  add_common(cert_cmd, common);
  cert_cmd->add_option("--dim", cert.dim)->capture_default_str();
  cert_cmd->add_option("--t", cert.t, "order of the statistic")->capture_default_str();
  cert_cmd->add_option("--shots", cert.shots, "rounds per (pair, member)")->capture_default_str();
  cert_cmd->add_flag("--exact", cert.exact, "use exact probabilities instead of sampling");
  cert_cmd->add_option("--epsilon", cert.epsilon, "error rate of the simulated measurement device");
  cert_cmd->add_option("--wire-prep", cert.wire_prep, "host:port of a remote preparation device");
  cert_cmd->add_option("--wire-meas", cert.wire_meas, "host:port of a remote measurement device");
  cert_cmd->add_option("--timeout-ms", cert.timeout_ms, "per-message wire timeout")->capture_default_str();
  cert_cmd->add_flag("--fresh-search", cert.fresh_search, "ignore the fiducial file");
  cert_cmd->add_flag("--require-certified", cert.require_certified, "exit nonzero unless certified");
  cert_cmd->add_option("--k-sigma", cert.k_sigma)->capture_default_str();
  cert_cmd->add_option("--resamples", cert.resamples, "bootstrap resamples")->capture_default_str();
  cert_cmd->add_option("--schedule", cert.schedule, "stratified | uniform")->capture_default_str();
  cert_cmd->add_option("--transcript", cert.transcript, "write the round transcript CSV here");

  SweepCommand sweep;
  auto* sweep_cmd = app.add_subcommand("sweep-dims", "certify SIC ensembles over a range of dimensions");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--dim-min", sweep.dim_min)->capture_default_str();
  sweep_cmd->add_option("--dim-max", sweep.dim_max)->capture_default_str();
  sweep_cmd->add_option("--t", sweep.t)->capture_default_str();
  sweep_cmd->add_option("--shots", sweep.shots)->capture_default_str();
  sweep_cmd->add_flag("--exact", sweep.exact);
  sweep_cmd->add_flag("--fresh-search", sweep.fresh_search);
  sweep_cmd->add_flag("--require-certified", sweep.require_certified);
  sweep_cmd->add_option("--k-sigma", sweep.k_sigma)->capture_default_str();
  sweep_cmd->add_option("--resamples", sweep.resamples)->capture_default_str();

  TurbulenceCommand turb;
  auto* turb_cmd = app.add_subcommand("turbulence", "S_eps against error rate or turbulence strength");
  add_common(turb_cmd, common);
  turb_cmd->add_option("--dim", turb.dim)->capture_default_str();
  turb_cmd->add_option("--t", turb.t)->capture_default_str();
  turb_cmd->add_option("--w-grid", turb.w_grid, "comma-separated turbulence strengths W")->delimiter(',');
  turb_cmd->add_option("--eps-grid", turb.eps_grid, "comma-separated error rates")->delimiter(',');
  turb_cmd->add_option("--realizations", turb.realizations)->capture_default_str();
  turb_cmd->add_option("--shots", turb.shots)->capture_default_str();
  turb_cmd->add_flag("--exact", turb.exact);
  turb_cmd->add_flag("--allow-high-dim", turb.allow_high_dim, "permit d > 5");
  turb_cmd->add_option("--grid-n", turb.grid_n)->capture_default_str();
  turb_cmd->add_option("--w0", turb.w0, "beam waist in meters")->capture_default_str();
  turb_cmd->add_option("--resamples", turb.resamples)->capture_default_str();
  turb_cmd->add_flag("--fresh-search", turb.fresh_search);

  CrosstalkCommand xt;
  auto* xt_cmd = app.add_subcommand("crosstalk", "OAM crosstalk matrix and similarity");
  add_common(xt_cmd, common);
  xt_cmd->add_option("--ell-min", xt.ell_min)->capture_default_str();
  xt_cmd->add_option("--ell-max", xt.ell_max)->capture_default_str();
  xt_cmd->add_option("--w", xt.w, "turbulence strength W")->capture_default_str();
  xt_cmd->add_option("--w-grid", xt.w_grid, "comma-separated W values for a similarity sweep")->delimiter(',');
  xt_cmd->add_option("--realizations", xt.realizations)->capture_default_str();
  xt_cmd->add_option("--grid-n", xt.grid_n)->capture_default_str();
  xt_cmd->add_option("--w0", xt.w0)->capture_default_str();
  xt_cmd->add_flag("--normalize", xt.normalize, "divide rows by captured power");
  xt_cmd->add_option("--batches", xt.batches, "batches for the similarity standard error")->capture_default_str();

  ServeCommand serve;
  auto* serve_cmd = app.add_subcommand("serve-device", "host a simulated device over TCP");
  add_common(serve_cmd, common);
  serve_cmd->add_option("--role", serve.role, "prep | meas")->required();
  serve_cmd->add_option("--dim", serve.dim)->capture_default_str();
  serve_cmd->add_option("--listen", serve.listen, "host:port (port 0 picks one)")->capture_default_str();
  serve_cmd->add_option("--epsilon", serve.epsilon)->capture_default_str();
  serve_cmd->add_option("--sessions", serve.sessions, "stop after this many sessions (0 = never)");
  serve_cmd->add_option("--timeout-ms", serve.timeout_ms)->capture_default_str();
  serve_cmd->add_flag("--fresh-search", serve.fresh_search);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  std::vector<std::string> argv_storage{"usdcert"};
  argv_storage.insert(argv_storage.end(), expanded.begin(), expanded.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    CommandOutput result;
    if (*fid_cmd) {
      result = run_fiducial(fid, common, err);
    } else if (*cert_cmd) {
      result = run_certify(cert, common, err);
    } else if (*sweep_cmd) {
      result = run_sweep_dims(sweep, common, err);
    } else if (*turb_cmd) {
      result = run_turbulence(turb, common, err);
    } else if (*xt_cmd) {
      result = run_crosstalk(xt, common, err);
    } else {
      return run_serve_device(serve, common, err);
    }
    emit(result, common, out, err);
    return result.status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace usdcert::cli
