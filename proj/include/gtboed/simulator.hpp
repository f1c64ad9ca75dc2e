// Copyright 2020 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Simulation harness: sample a ground truth, run a policy for a number of
// cycles against simulated lab tests, and aggregate detection metrics.

#ifndef GTBOED_SIMULATOR_HPP_
#define GTBOED_SIMULATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gtboed/core.hpp"
#include "gtboed/session.hpp"

namespace gtboed {

inline constexpr int kTrajectorySchemaVersion = 1;

struct SimulationConfig {
  // Policy side: prior, noise, budget and policy used by the algorithms.
  SessionConfig policy;
  // Ground truth used to sample infections and test outcomes.
  Prior truth_prior;
  NoiseModel truth_noise;
  size_t cycles = 5;
  std::vector<double> thresholds{0.03, 0.10};

  void Validate() const;
};

struct Trajectory {
  size_t run = 0;
  StateVector truth;
  std::vector<CycleRecord> cycles;

  size_t TotalTests() const;
};

// Run `run_index` of a batch seeded by `master_seed`.
Trajectory RunSimulation(const SimulationConfig& config, uint64_t master_seed,
                         size_t run_index = 0);

// Positive when marginal >= threshold. Either value is nullopt when its
// denominator is zero.
std::pair<std::optional<double>, std::optional<double>> SensitivitySpecificity(
    std::span<const double> marginal, double threshold, const StateVector& truth);

struct MetricRow {
  std::string policy;
  size_t cycle = 0;
  double threshold = 0.0;
  double mean_sensitivity = 0.0;
  double mean_specificity = 0.0;
  size_t n_runs = 0;
  size_t n_sens_defined = 0;
};

// One row per (cycle, threshold); sensitivity is averaged over the runs
// where it is defined, specificity likewise.
std::vector<MetricRow> ComputeMetrics(const std::string& policy,
                                      const std::vector<Trajectory>& runs,
                                      const std::vector<double>& thresholds);

struct FrontierPoint {
  double threshold = 0.0;
  double mean_specificity = 0.0;
  double mean_sensitivity = 0.0;
};

// `cycle` is 1-based.
std::vector<FrontierPoint> Frontier(const std::vector<Trajectory>& runs,
                                    size_t cycle,
                                    const std::vector<double>& thresholds);

struct BatchResult {
  std::vector<MetricRow> metrics;
  std::vector<Trajectory> trajectories;
};

// Runs are distributed over `parallelism` threads; the result does not
// depend on the thread count.
BatchResult RunBatch(const SimulationConfig& config, size_t runs,
                     uint64_t master_seed, size_t parallelism = 1);

inline constexpr const char* kMetricsCsvHeader =
    "policy,cycle,threshold,mean_sensitivity,mean_specificity,n_runs,"
    "n_sens_defined";

void WriteMetricsCsv(std::ostream& out, const std::vector<MetricRow>& rows);

// One JSON object per line. Timings are left out unless asked for, so that
// equal seeds give byte-identical files.
void WriteTrajectoryJsonl(std::ostream& out, const std::string& policy,
                          const Trajectory& trajectory,
                          bool include_timing = false);

}  // namespace gtboed

#endif  // GTBOED_SIMULATOR_HPP_
