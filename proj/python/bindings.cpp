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


#include <limits>
#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "usdcert/certifier.hpp"
#include "usdcert/error.hpp"
#include "usdcert/fiducial.hpp"
#include "usdcert/harness.hpp"
#include "usdcert/qudit.hpp"
#include "usdcert/rng.hpp"
#include "usdcert/turbulence.hpp"
#include "usdcert/usd.hpp"

namespace py = pybind11;
using namespace usdcert;

namespace {

std::vector<Amplitudes> states_of(const StateEnsemble& e) {
  std::vector<Amplitudes> out;
  out.reserve(e.size());
  for (const auto& s : e) out.push_back(s.amplitudes());
  return out;
}

StateEnsemble ensemble_of(const std::vector<Amplitudes>& states) {
  std::vector<QuditState> v;
  v.reserve(states.size());
  for (const auto& a : states) v.push_back(QuditState::normalized(a));
  return StateEnsemble(std::move(v));
}

py::dict report_dict(const DesignReport& r) {
  py::dict d;
  d["frame_potential"] = r.frame_potential;
  d["welch_bound"] = r.welch_bound;
  d["excess"] = r.excess;
  d["is_design"] = r.is_design;
  d["t"] = r.t;
  return d;
}

py::dict statistic_dict(const StStatistic& s) {
  py::dict d;
  d["value"] = s.value;
  d["sigma"] = s.sigma;
  d["t"] = s.t;
  d["exact"] = s.mode == StatMode::kExact;
  d["bootstrap_warning"] = s.bootstrap_warning;
  return d;
}

std::vector<PairStats> sampled_pairs(const StateEnsemble& ens, std::uint64_t shots, std::uint64_t seed,
                                     double epsilon, std::string* transcript_csv) {
  const auto d = ens.dim();
  const CertificationRun run{d, static_cast<int>(ens.size()), 2, shots, seed};
  const auto seeds = split_seeds(seed);
  SimulatedPreparer prep(ens, seeds.preparer);
  SimulatedMeasurer meas(ens, seeds.measurer, ErrorModel(epsilon));
  const auto t = run_protocol(prep, meas, run);
  if (transcript_csv) {
    std::ostringstream os;
    write_transcript_csv(os, t);
    *transcript_csv = os.str();
  }
  return estimate_pair_stats(t);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certification of high-dimensional state ensembles by unambiguous discrimination";
  m.attr("__version__") = USDCERT_VERSION;
  m.attr("DEFAULT_FIDUCIAL_FILE") = USDCERT_FIDUCIAL_FILE;
  m.attr("DEFAULT_WAIST") = kDefaultWaist;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<SearchFailed>(m, "SearchFailed", base.ptr());
  py::register_exception<InsufficientStatistics>(m, "InsufficientStatistics", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<DeviceUnavailable>(m, "DeviceUnavailable", base.ptr());

  m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed), py::arg("master"),
        py::arg("key"));

  m.def("wh_orbit", [](const Amplitudes& fiducial) { return states_of(wh_orbit(QuditState::normalized(fiducial))); },
        py::arg("fiducial"), "Weyl-Heisenberg orbit X^j Z^k |v>, j-major.");
  m.def("frame_potential", [](const std::vector<Amplitudes>& s, int t) { return frame_potential(ensemble_of(s), t); },
        py::arg("states"), py::arg("t"));
  m.def("welch_bound", &welch_bound, py::arg("dim"), py::arg("n"), py::arg("t"));
  m.def("is_t_design",
        [](const std::vector<Amplitudes>& s, int t, double tol) { return report_dict(is_t_design(ensemble_of(s), t, tol)); },
        py::arg("states"), py::arg("t"), py::arg("tol") = 1e-8);

  m.def(
      "find_sic_fiducial",
      [](int dim, std::uint64_t seed, int restarts, int max_iterations) {
        FiducialSearchConfig config;
        config.restarts = restarts;
        config.max_iterations = max_iterations;
        const auto r = find_sic_fiducial(dim, config, seed);
        return py::make_tuple(r.fiducial.amplitudes(), report_dict(r.report));
      },
      py::arg("dim"), py::arg("seed") = 1, py::arg("restarts") = 20, py::arg("max_iterations") = 5000);
  m.def(
      "load_fiducial",
      [](int dim, const std::string& path) -> py::object {
        const auto r = load_verified_fiducial(path.empty() ? std::string(USDCERT_FIDUCIAL_FILE) : path, dim);
        if (!r) return py::none();
        return py::cast(r->fiducial.amplitudes());
      },
      py::arg("dim"), py::arg("path") = "");

  m.def(
      "usd_probabilities",
      [](const Amplitudes& psi1, const Amplitudes& psi2, const Amplitudes& sent, double epsilon) {
        const auto povm = build_usd_povm(QuditState::normalized(psi1), QuditState::normalized(psi2));
        const auto p = apply_error_channel(outcome_probabilities(povm, QuditState::normalized(sent)), ErrorModel(epsilon));
        return py::make_tuple(p.first, p.second, p.inconclusive);
      },
      py::arg("psi1"), py::arg("psi2"), py::arg("sent"), py::arg("epsilon") = 0.0,
      "(first, second, inconclusive) probabilities of the optimal measurement.");

  m.def("theoretical_min", &theoretical_min, py::arg("dim"), py::arg("n"), py::arg("t"));
  m.def("alpha_eps", &alpha_eps, py::arg("epsilon"));
  m.def(
      "exact_statistic",
      [](const std::vector<Amplitudes>& s, int t, double epsilon) {
        return statistic_dict(s_eps(exact_pair_stats(ensemble_of(s)), epsilon, t));
      },
      py::arg("states"), py::arg("t") = 2, py::arg("epsilon") = 0.0);
  m.def(
      "sampled_statistic",
      [](const std::vector<Amplitudes>& s, std::uint64_t shots, std::uint64_t seed, double device_epsilon,
         int resamples) {
        const auto pairs = sampled_pairs(ensemble_of(s), shots, seed, device_epsilon, nullptr);
        return statistic_dict(s_t(pairs, 2, {resamples, derive_seed(seed, "bootstrap")}));
      },
      py::arg("states"), py::arg("shots"), py::arg("seed"), py::arg("device_epsilon") = 0.0,
      py::arg("resamples") = 1000);
  m.def(
      "transcript_csv",
      [](const std::vector<Amplitudes>& s, std::uint64_t shots, std::uint64_t seed) {
        std::string csv;
        sampled_pairs(ensemble_of(s), shots, seed, 0.0, &csv);
        return csv;
      },
      py::arg("states"), py::arg("shots"), py::arg("seed"));
  m.def(
      "certify",
      [](int dim, std::uint64_t shots, std::uint64_t seed, bool exact, double k_sigma) {
        const auto fid = load_verified_fiducial(USDCERT_FIDUCIAL_FILE, dim);
        const auto ens = fid ? wh_orbit(fid->fiducial) : wh_orbit(find_sic_fiducial(dim, {}, derive_seed(seed, "fiducial")).fiducial);
        const auto stat = exact ? s_t(exact_pair_stats(ens), 2)
                                : s_t(sampled_pairs(ens, shots, seed, 0.0, nullptr), 2, {1000, derive_seed(seed, "bootstrap")});
        const auto v = verdict(stat, dim, ens.size(), 2, k_sigma);
        auto d = statistic_dict(stat);
        d["bound"] = v.bound;
        d["z"] = v.z_score;
        d["certified"] = v.certified;
        return d;
      },
      py::arg("dim"), py::arg("shots") = 10000, py::arg("seed") = 1, py::arg("exact") = false,
      py::arg("k_sigma") = kDefaultKSigma);

  m.def(
      "phase_screen",
      [](int n, double w, std::uint64_t seed, int subharmonic_levels) {
        if (!(w >= 0.0)) throw InvalidInput("strength W must be nonnegative");
        const double r0 = w == 0.0 ? std::numeric_limits<double>::infinity() : kDefaultWaist / w;
        return kolmogorov_screen(GridSpec::for_waist(kDefaultWaist, n), r0, seed, kDefaultWaist, subharmonic_levels)
            .phase;
      },
      py::arg("n"), py::arg("w"), py::arg("seed"), py::arg("subharmonic_levels") = 0,
      "Phase map in radians for scintillation strength W = w0 / r0.");
  m.def(
      "crosstalk",
      [](const std::vector<int>& ells, double w, int realizations, std::uint64_t seed, int n, bool normalize) {
        const auto m = crosstalk(lg_modes(ells), GridSpec::for_waist(kDefaultWaist, n), w, realizations, seed,
                                 CrosstalkOptions{normalize});
        return py::make_tuple(m.entries, m.std_error);
      },
      py::arg("ells"), py::arg("w"), py::arg("realizations") = 200, py::arg("seed") = 1, py::arg("n") = 512,
      py::arg("normalize") = false);
  m.def("similarity", py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&>(&similarity),
        py::arg("measured"), py::arg("ideal"));
  m.def(
      "error_rate",
      [](const std::vector<Amplitudes>& s, double w, int realizations, std::uint64_t seed, int n) {
        const auto ens = ensemble_of(s);
        const auto r = error_rate_from_turbulence(ens, embedding_modes(ens.dim()), GridSpec::for_waist(kDefaultWaist, n),
                                                  w, realizations, seed);
        return py::make_tuple(r.epsilon, r.std_error);
      },
      py::arg("states"), py::arg("w"), py::arg("realizations") = 200, py::arg("seed") = 1, py::arg("n") = 512);
}
