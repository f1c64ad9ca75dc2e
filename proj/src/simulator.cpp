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

#include "gtboed/simulator.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <thread>

#include "gtboed/error.hpp"
#include "gtboed/json_io.hpp"

namespace gtboed {

void SimulationConfig::Validate() const {
  policy.Validate();
  Error::FieldErrors fields;
  if (truth_prior.size() != policy.prior.size()) {
    fields.emplace_back("truth.q", "truth and policy priors differ in size");
  }
  if (truth_noise.max_group_size() < policy.max_group_size) {
    fields.emplace_back("truth", "noise table shorter than max_group_size");
  }
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      fields.emplace_back("thresholds", "must lie in [0, 1]");
      break;
    }
  }
  if (!fields.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid simulation configuration: " + fields.front().first +
                    ": " + fields.front().second,
                std::move(fields));
  }
}

size_t Trajectory::TotalTests() const {
  size_t total = 0;
  for (const auto& c : cycles) total += c.batch.size();
  return total;
}

Trajectory RunSimulation(const SimulationConfig& config, uint64_t master_seed,
                         size_t run_index) {
  config.Validate();
  Rng truth_rng = DeriveRng(master_seed, run_index, "truth");
  Rng test_rng = DeriveRng(master_seed, run_index, "tests");
  SessionConfig session_config = config.policy;
  session_config.seed = master_seed;

  Trajectory out;
  out.run = run_index;
  out.truth = config.truth_prior.Sample(truth_rng);
  TestingSession session(std::move(session_config), run_index);
  for (size_t t = 1; t <= config.cycles; ++t) {
    const auto start = std::chrono::steady_clock::now();
    CycleRecord record;
    record.batch = session.Propose();
    if (!record.batch.empty()) {
      record.outcomes =
          SampleOutcomes(record.batch, out.truth, config.truth_noise, test_rng);
      try {
        session.Observe(record.outcomes);
      } catch (const Error& e) {
        throw Error(e.code(), "run " + std::to_string(run_index) + ", cycle " +
                                  std::to_string(t) + ": " + e.what());
      }
    }
    record.marginal = session.marginal();
    record.used_lbp = session.last_used_lbp();
    record.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    out.cycles.push_back(std::move(record));
  }
  return out;
}

std::pair<std::optional<double>, std::optional<double>> SensitivitySpecificity(
    std::span<const double> marginal, double threshold,
    const StateVector& truth) {
  if (marginal.size() != truth.size()) {
    ThrowInvalidArgument("marginal and truth differ in length");
  }
  size_t tp = 0, po = 0, tn = 0, ne = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool flagged = marginal[i] >= threshold;
    if (truth[i]) {
      ++po;
      tp += flagged;
    } else {
      ++ne;
      tn += !flagged;
    }
  }
  std::optional<double> sens, spec;
  if (po) sens = static_cast<double>(tp) / static_cast<double>(po);
  if (ne) spec = static_cast<double>(tn) / static_cast<double>(ne);
  return {sens, spec};
}

namespace {

struct Averages {
  double sensitivity = 0.0;
  double specificity = 0.0;
  size_t sens_defined = 0;
};

Averages Average(const std::vector<Trajectory>& runs, size_t cycle,
                 double threshold) {
  double sens_sum = 0.0, spec_sum = 0.0;
  size_t sens_n = 0, spec_n = 0;
  for (const auto& run : runs) {
    if (cycle == 0 || cycle > run.cycles.size()) {
      ThrowInvalidArgument("cycle out of range");
    }
    auto [sens, spec] = SensitivitySpecificity(run.cycles[cycle - 1].marginal,
                                               threshold, run.truth);
    if (sens) {
      sens_sum += *sens;
      ++sens_n;
    }
    if (spec) {
      spec_sum += *spec;
      ++spec_n;
    }
  }
  Averages a;
  a.sens_defined = sens_n;
  a.sensitivity = sens_n ? sens_sum / static_cast<double>(sens_n) : 0.0;
  a.specificity = spec_n ? spec_sum / static_cast<double>(spec_n) : 0.0;
  return a;
}

}  // namespace

std::vector<MetricRow> ComputeMetrics(const std::string& policy,
                                      const std::vector<Trajectory>& runs,
                                      const std::vector<double>& thresholds) {
  std::vector<MetricRow> rows;
  if (runs.empty()) return rows;
  const size_t cycles = runs.front().cycles.size();
  for (size_t c = 1; c <= cycles; ++c) {
    for (double threshold : thresholds) {
      const Averages a = Average(runs, c, threshold);
      rows.push_back({policy, c, threshold, a.sensitivity, a.specificity,
                      runs.size(), a.sens_defined});
    }
  }
  return rows;
}

std::vector<FrontierPoint> Frontier(const std::vector<Trajectory>& runs,
                                    size_t cycle,
                                    const std::vector<double>& thresholds) {
  std::vector<FrontierPoint> out;
  for (double threshold : thresholds) {
    const Averages a = Average(runs, cycle, threshold);
    out.push_back({threshold, a.specificity, a.sensitivity});
  }
  return out;
}

BatchResult RunBatch(const SimulationConfig& config, size_t runs,
                     uint64_t master_seed, size_t parallelism) {
  if (runs < 1) ThrowInvalidArgument("runs must be >= 1");
  config.Validate();
  BatchResult result;
  result.trajectories.resize(runs);
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= runs) break;
      try {
        result.trajectories[i] = RunSimulation(config, master_seed, i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const size_t threads = std::max<size_t>(1, std::min(parallelism, runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.metrics = ComputeMetrics(config.policy.policy.name,
                                  result.trajectories, config.thresholds);
  return result;
}

void WriteMetricsCsv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << kMetricsCsvHeader << '\n';
  char buffer[64];
  auto number = [&](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };
  for (const auto& r : rows) {
    out << r.policy << ',' << r.cycle << ',' << number(r.threshold) << ','
        << number(r.mean_sensitivity) << ',' << number(r.mean_specificity)
        << ',' << r.n_runs << ',' << r.n_sens_defined << '\n';
  }
}

void WriteTrajectoryJsonl(std::ostream& out, const std::string& policy,
                          const Trajectory& trajectory, bool include_timing) {
  Json j;
  j["schema"] = "gtboed.trajectory";
  j["version"] = kTrajectorySchemaVersion;
  j["policy"] = policy;
  j["run"] = trajectory.run;
  j["n"] = trajectory.truth.size();
  j["truth"] = trajectory.truth.ToString();
  Json cycles = Json::array();
  for (size_t t = 0; t < trajectory.cycles.size(); ++t) {
    const CycleRecord& c = trajectory.cycles[t];
    Json r;
    r["cycle"] = t + 1;
    r["groups"] = BatchToJson(c.batch);
    r["outcomes"] = OutcomesToJson(c.outcomes);
    r["marginal"] = c.marginal;
    r["decoder"] = c.used_lbp ? "lbp" : "smc";
    if (include_timing) r["seconds"] = c.seconds;
    cycles.push_back(std::move(r));
  }
  j["cycles"] = std::move(cycles);
  out << j.dump() << '\n';
}

}  // namespace gtboed
