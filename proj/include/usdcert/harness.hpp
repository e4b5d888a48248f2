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

#ifndef USDCERT_HARNESS_HPP
#define USDCERT_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "usdcert/certifier.hpp"
#include "usdcert/qudit.hpp"
#include "usdcert/rng.hpp"
#include "usdcert/usd.hpp"

namespace usdcert {

/// What travels from the preparation device to the measurement device. The
/// referee forwards it without looking inside.
struct EmittedSystem {
  Amplitudes amplitudes;
};

/// Measurement setting y: the pair of buttons (1-based, first < second) whose
/// states the measurement discriminates.
struct PairLabel {
  int first = 1;
  int second = 2;
};

/// Black box with N buttons. Implementations keep no memory across rounds and
/// own a private random stream.
class PreparationDevice {
 public:
  virtual ~PreparationDevice() = default;
  virtual int dim() const = 0;
  virtual int buttons() const = 0;
  virtual EmittedSystem press(std::uint64_t round, int x) = 0;
};

/// Black box performing the measurement selected by the pair label.
class MeasurementDevice {
 public:
  virtual ~MeasurementDevice() = default;
  virtual int dim() const = 0;
  virtual Outcome measure(std::uint64_t round, PairLabel y, const EmittedSystem& system) = 0;
};

/// Emits the ensemble member for button x with a uniformly random global phase
/// drawn from its own stream.
class SimulatedPreparer final : public PreparationDevice {
 public:
  SimulatedPreparer(StateEnsemble ensemble, std::uint64_t seed);

  int dim() const override { return ensemble_.dim(); }
  int buttons() const override { return static_cast<int>(ensemble_.size()); }
  EmittedSystem press(std::uint64_t round, int x) override;

 private:
  StateEnsemble ensemble_;
  Rng rng_;
};

/// Applies the optimal USD measurement for the pair (built from its own copy
/// of the target ensemble), passes the result through the error channel and
/// samples an outcome from its own stream.
class SimulatedMeasurer final : public MeasurementDevice {
 public:
  SimulatedMeasurer(StateEnsemble ensemble, std::uint64_t seed, ErrorModel errors = {});

  int dim() const override { return ensemble_.dim(); }
  Outcome measure(std::uint64_t round, PairLabel y, const EmittedSystem& system) override;

 private:
  const UsdPovm& povm_for(PairLabel y);

  StateEnsemble ensemble_;
  Rng rng_;
  ErrorModel errors_;
  std::vector<std::optional<UsdPovm>> povms_;
};

/// Seeds for the three parties, split from one master seed with distinct keys.
struct DeviceSeeds {
  std::uint64_t referee = 0;
  std::uint64_t preparer = 0;
  std::uint64_t measurer = 0;
};
DeviceSeeds split_seeds(std::uint64_t master) noexcept;

enum class Schedule {
  kStratified,  ///< exactly `shots` rounds per (pair, member), shuffled within each pair
  kUniform,     ///< every round draws a uniform pair and member
};

struct RoundRecord {
  std::uint64_t round = 0;
  int x1 = 1;
  int x2 = 2;
  int member = 1;  ///< 1 when psi_{x1} was sent, 2 for psi_{x2}; hidden from the measurer
  Outcome outcome = Outcome::kInconclusive;
};

struct ProtocolTranscript {
  std::vector<RoundRecord> rounds;
  CertificationRun config;
  bool truncated = false;
  std::string failure;
};

struct ProtocolSummary {
  std::uint64_t rounds = 0;
  bool truncated = false;
  std::string failure;
};

using RoundObserver = std::function<void(const RoundRecord&)>;

/// Referee loop. Each round announces a pair to both devices, picks which
/// member Alice sends, forwards the emitted system to Bob and reports the
/// record to `observer`. A device failure stops the run and flags it truncated.
ProtocolSummary run_protocol(PreparationDevice& prep, MeasurementDevice& meas, const CertificationRun& config,
                             const RoundObserver& observer, Schedule schedule = Schedule::kStratified);

ProtocolTranscript run_protocol(PreparationDevice& prep, MeasurementDevice& meas, const CertificationRun& config,
                                Schedule schedule = Schedule::kStratified);

/// Streams round records into per-pair counts.
class PairStatsAccumulator {
 public:
  explicit PairStatsAccumulator(int buttons);

  void add(const RoundRecord& record);
  /// Throws InvalidInput if any (pair, member) saw no rounds.
  std::vector<PairStats> finish() const;

 private:
  std::size_t index(int x1, int x2) const;

  int buttons_;
  std::vector<MemberCounts> first_;
  std::vector<MemberCounts> second_;
};

/// Empirical per-pair statistics of a complete transcript.
std::vector<PairStats> estimate_pair_stats(const ProtocolTranscript& transcript);

/// Infinite-shot statistics: p_usd of the optimal measurement after the error
/// channel, i.e. (1 - epsilon)(1 - |<psi1|psi2>|) per pair.
std::vector<PairStats> exact_pair_stats(const StateEnsemble& ensemble, const ErrorModel& errors = {});

/// CSV with columns round,x1,x2,member,outcome,seed.
void write_transcript_csv(std::ostream& out, const ProtocolTranscript& transcript);

/// Streaming pieces of the same format.
void write_transcript_csv_header(std::ostream& out);
void write_transcript_csv_row(std::ostream& out, const RoundRecord& record, std::uint64_t seed);

}  // namespace usdcert

#endif  // USDCERT_HARNESS_HPP
