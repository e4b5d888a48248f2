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

#include "usdcert/harness.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>
#include <string>

#include "usdcert/error.hpp"

namespace usdcert {

namespace {

std::size_t pair_index(int x1, int x2, int buttons) {
  // Lexicographic rank of (x1, x2) among 1 <= x1 < x2 <= buttons.
  const auto a = static_cast<std::size_t>(x1 - 1);
  const auto n = static_cast<std::size_t>(buttons);
  return a * (2 * n - a - 1) / 2 + static_cast<std::size_t>(x2 - x1 - 1);
}

void check_pair(PairLabel y, int buttons) {
  if (!(y.first >= 1 && y.first < y.second && y.second <= buttons)) {
    throw InvalidInput("pair label (" + std::to_string(y.first) + "," + std::to_string(y.second) +
                       ") outside 1 <= y1 < y2 <= " + std::to_string(buttons));
  }
}

}  // namespace

SimulatedPreparer::SimulatedPreparer(StateEnsemble ensemble, std::uint64_t seed)
    : ensemble_(std::move(ensemble)), rng_(make_rng(seed)) {}

EmittedSystem SimulatedPreparer::press(std::uint64_t /*round*/, int x) {
  if (x < 1 || x > buttons()) {
    throw InvalidInput("button " + std::to_string(x) + " outside 1.." + std::to_string(buttons()));
  }
  const Complex phase = std::polar(1.0, 2.0 * std::numbers::pi * uniform01(rng_));
  return {phase * ensemble_[static_cast<std::size_t>(x - 1)].amplitudes()};
}

SimulatedMeasurer::SimulatedMeasurer(StateEnsemble ensemble, std::uint64_t seed, ErrorModel errors)
    : ensemble_(std::move(ensemble)),
      rng_(make_rng(seed)),
      errors_(errors),
      povms_(ensemble_.size() * (ensemble_.size() - 1) / 2) {}

const UsdPovm& SimulatedMeasurer::povm_for(PairLabel y) {
  const int n = static_cast<int>(ensemble_.size());
  check_pair(y, n);
  auto& slot = povms_[pair_index(y.first, y.second, n)];
  if (!slot) {
    slot = build_usd_povm(ensemble_[static_cast<std::size_t>(y.first - 1)],
                          ensemble_[static_cast<std::size_t>(y.second - 1)]);
  }
  return *slot;
}

Outcome SimulatedMeasurer::measure(std::uint64_t /*round*/, PairLabel y, const EmittedSystem& system) {
  const auto probs = apply_error_channel(povm_for(y).probabilities(system.amplitudes), errors_);
  const double u = uniform01(rng_);
  if (u < probs.first) return Outcome::kIdentifyFirst;
  if (u < probs.first + probs.second) return Outcome::kIdentifySecond;
  return Outcome::kInconclusive;
}

DeviceSeeds split_seeds(std::uint64_t master) noexcept {
  return {derive_seed(master, "referee"), derive_seed(master, "prep"), derive_seed(master, "meas")};
}

ProtocolSummary run_protocol(PreparationDevice& prep, MeasurementDevice& meas, const CertificationRun& config,
                             const RoundObserver& observer, Schedule schedule) {
  config.validate();
  if (prep.dim() != config.d || meas.dim() != config.d) {
    throw InvalidInput("device dimensions do not match the run configuration");
  }
  if (prep.buttons() != config.n) throw InvalidInput("preparation device has the wrong number of buttons");
  if (config.shots == 0) throw InvalidInput("shots per (pair, member) must be positive");

  Rng rng = make_rng(split_seeds(config.seed).referee);
  ProtocolSummary summary;
  auto play = [&](int x1, int x2, int member) {
    RoundRecord rec{summary.rounds, x1, x2, member, Outcome::kInconclusive};
    const auto system = prep.press(rec.round, member == 1 ? x1 : x2);
    rec.outcome = meas.measure(rec.round, {x1, x2}, system);
    observer(rec);
    ++summary.rounds;
  };

  try {
    if (schedule == Schedule::kStratified) {
      std::vector<std::uint8_t> members(2 * config.shots);
      for (int x1 = 1; x1 <= config.n; ++x1) {
        for (int x2 = x1 + 1; x2 <= config.n; ++x2) {
          std::fill(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(config.shots), 1);
          std::fill(members.begin() + static_cast<std::ptrdiff_t>(config.shots), members.end(), 2);
          // Fisher-Yates with the referee's stream.
          for (std::size_t i = members.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
            std::swap(members[i - 1], members[std::min(j, i - 1)]);
          }
          for (auto m : members) play(x1, x2, m);
        }
      }
    } else {
      const auto pairs = static_cast<std::uint64_t>(config.n) * (config.n - 1) / 2;
      const std::uint64_t total = pairs * 2 * config.shots;
      std::vector<std::pair<int, int>> labels;
      labels.reserve(pairs);
      for (int x1 = 1; x1 <= config.n; ++x1) {
        for (int x2 = x1 + 1; x2 <= config.n; ++x2) labels.emplace_back(x1, x2);
      }
      for (std::uint64_t r = 0; r < total; ++r) {
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pairs)),
                                             labels.size() - 1);
        const int member = uniform01(rng) < 0.5 ? 1 : 2;
        play(labels[k].first, labels[k].second, member);
      }
    }
  } catch (const DeviceUnavailable& e) {
    summary.truncated = true;
    summary.failure = e.what();
  } catch (const ProtocolError& e) {
    summary.truncated = true;
    summary.failure = e.what();
  }
  return summary;
}

ProtocolTranscript run_protocol(PreparationDevice& prep, MeasurementDevice& meas, const CertificationRun& config,
                                Schedule schedule) {
  ProtocolTranscript transcript;
  transcript.config = config;
  transcript.rounds.reserve(static_cast<std::size_t>(config.n) * (config.n - 1) * config.shots);
  const auto summary =
      run_protocol(prep, meas, config, [&](const RoundRecord& r) { transcript.rounds.push_back(r); }, schedule);
  transcript.truncated = summary.truncated;
  transcript.failure = summary.failure;
  return transcript;
}

PairStatsAccumulator::PairStatsAccumulator(int buttons)
    : buttons_(buttons),
      first_(static_cast<std::size_t>(buttons) * (buttons - 1) / 2),
      second_(first_.size()) {
  if (buttons < 2) throw InvalidInput("need at least two buttons");
}

std::size_t PairStatsAccumulator::index(int x1, int x2) const {
  check_pair({x1, x2}, buttons_);
  return pair_index(x1, x2, buttons_);
}

void PairStatsAccumulator::add(const RoundRecord& record) {
  if (record.member != 1 && record.member != 2) throw InvalidInput("member must be 1 or 2");
  const auto k = index(record.x1, record.x2);
  auto& counts = record.member == 1 ? first_[k] : second_[k];
  switch (record.outcome) {
    case Outcome::kIdentifyFirst:
      ++counts.identify_first;
      break;
    case Outcome::kIdentifySecond:
      ++counts.identify_second;
      break;
    case Outcome::kInconclusive:
      ++counts.inconclusive;
      break;
  }
}

std::vector<PairStats> PairStatsAccumulator::finish() const {
  std::vector<PairStats> stats;
  stats.reserve(first_.size());
  for (int x1 = 1; x1 <= buttons_; ++x1) {
    for (int x2 = x1 + 1; x2 <= buttons_; ++x2) {
      const auto k = pair_index(x1, x2, buttons_);
      stats.push_back(PairStats::from_counts(x1, x2, first_[k], second_[k]));
    }
  }
  return stats;
}

std::vector<PairStats> estimate_pair_stats(const ProtocolTranscript& transcript) {
  if (transcript.truncated) {
    throw InvalidInput("transcript is truncated (" + transcript.failure + "); statistics rejected");
  }
  PairStatsAccumulator acc(transcript.config.n);
  for (const auto& r : transcript.rounds) acc.add(r);
  return acc.finish();
}

std::vector<PairStats> exact_pair_stats(const StateEnsemble& ensemble, const ErrorModel& errors) {
  std::vector<PairStats> stats;
  const int n = static_cast<int>(ensemble.size());
  for (int x1 = 1; x1 <= n; ++x1) {
    for (int x2 = x1 + 1; x2 <= n; ++x2) {
      const auto& a = ensemble[static_cast<std::size_t>(x1 - 1)];
      const auto& b = ensemble[static_cast<std::size_t>(x2 - 1)];
      const auto povm = build_usd_povm(a, b);
      const double p = 0.5 * (apply_error_channel(outcome_probabilities(povm, a), errors).first +
                              apply_error_channel(outcome_probabilities(povm, b), errors).second);
      stats.push_back(PairStats::exact_value(x1, x2, std::clamp(p, 0.0, 1.0)));
    }
  }
  return stats;
}

void write_transcript_csv_header(std::ostream& out) { out << "round,x1,x2,member,outcome,seed\n"; }

void write_transcript_csv_row(std::ostream& out, const RoundRecord& r, std::uint64_t seed) {
  out << r.round << ',' << r.x1 << ',' << r.x2 << ',' << r.member << ',' << to_string(r.outcome) << ',' << seed
      << '\n';
}

void write_transcript_csv(std::ostream& out, const ProtocolTranscript& transcript) {
  write_transcript_csv_header(out);
  for (const auto& r : transcript.rounds) write_transcript_csv_row(out, r, transcript.config.seed);
}

}  // namespace usdcert
