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

#include "gtboed/decoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

constexpr double kMaxDecoderSensitivity = 1.0 - 1e-9;
constexpr double kMaxPositiveExponent = -1e-12;

// log(1 + e^x) without overflow.
double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

[[noreturn]] void BadLine(size_t line_no, const std::string& what) {
  ThrowInvalidArgument("tests line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

TestHistory ParseTestRecords(std::string_view text) {
  TestHistory history;
  size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto split = line.find_last_of(" \t");
    if (split == std::string_view::npos) BadLine(line_no, "missing outcome");
    const auto outcome = line.substr(split + 1);
    std::string_view members = Trim(line.substr(0, split));
    if (outcome != "0" && outcome != "1") {
      BadLine(line_no, "outcome must be 0 or 1");
    }
    if (members.empty() || members.back() == ',') {
      BadLine(line_no, "missing outcome column");
    }
    std::vector<uint32_t> group;
    while (true) {
      const auto comma = members.find(',');
      const auto field = Trim(members.substr(0, comma));
      uint32_t value = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() ||
          ptr != field.data() + field.size()) {
        BadLine(line_no, "bad index '" + std::string(field) + "'");
      }
      group.push_back(value);
      if (comma == std::string_view::npos) break;
      members = members.substr(comma + 1);
    }
    try {
      history.groups.emplace_back(std::move(group));
    } catch (const Error& e) {
      BadLine(line_no, e.what());
    }
    history.outcomes.push_back(outcome == "1" ? 1 : 0);
  }
  return history;
}

LbpReport LbpDecode(const TestHistory& history, const NoiseModel& noise,
                    const Prior& prior, const LbpOptions& options) {
  if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
    ThrowInvalidArgument("LBP needs max_iterations >= 1 and tolerance > 0");
  }
  if (history.groups.size() != history.outcomes.size()) {
    ThrowInvalidArgument("outcome count does not match number of tests");
  }
  const size_t n = prior.size();
  const size_t m = history.size();

  std::vector<double> mu(n);
  for (size_t i = 0; i < n; ++i) {
    mu[i] = std::log1p(-prior.rates[i]) - std::log(prior.rates[i]);
  }

  // Edge e joins variable edge_var[e] and test edge_test[e]; edges of test j
  // are contiguous in [test_begin[j], test_begin[j + 1]).
  std::vector<uint32_t> edge_var;
  std::vector<uint32_t> test_begin(m + 1, 0);
  std::vector<double> gamma(m);
  std::vector<uint8_t> positive(m);
  for (size_t j = 0; j < m; ++j) {
    const Group& g = history.groups[j];
    g.Validate(n, noise.max_group_size());
    for (uint32_t i : g.members()) edge_var.push_back(i);
    test_begin[j + 1] = static_cast<uint32_t>(edge_var.size());
    const double s = std::min(noise.sensitivity(g.size()),
                              kMaxDecoderSensitivity);
    const double rho = noise.specificity(g.size()) + s - 1.0;
    positive[j] = history.outcomes[j] ? 1 : 0;
    gamma[j] = positive[j] ? std::log(rho / s) : std::log(rho / (1.0 - s));
  }
  const size_t edges = edge_var.size();
  std::vector<double> alpha(edges, 0.0);
  std::vector<double> beta(edges, 0.0);
  std::vector<double> beta_sum(n, 0.0);

  LbpReport report;
  report.marginal = prior.rates;
  std::vector<double> next(n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (size_t e = 0; e < edges; ++e) {
      const uint32_t i = edge_var[e];
      alpha[e] = -Softplus(-mu[i] - beta_sum[i] + beta[e]);
    }
    for (size_t j = 0; j < m; ++j) {
      double alpha_sum = 0.0;
      for (uint32_t e = test_begin[j]; e < test_begin[j + 1]; ++e) {
        alpha_sum += alpha[e];
      }
      for (uint32_t e = test_begin[j]; e < test_begin[j + 1]; ++e) {
        const double z = gamma[j] + alpha_sum - alpha[e];
        beta[e] = positive[j]
                      ? std::log(-std::expm1(std::min(z, kMaxPositiveExponent)))
                      : Softplus(z);
      }
    }
    std::fill(beta_sum.begin(), beta_sum.end(), 0.0);
    for (size_t e = 0; e < edges; ++e) beta_sum[edge_var[e]] += beta[e];

    double delta = 0.0;
    for (size_t i = 0; i < n; ++i) {
      next[i] = 1.0 / (1.0 + std::exp(mu[i] + beta_sum[i]));
      delta = std::max(delta, std::abs(next[i] - report.marginal[i]));
    }
    report.marginal.swap(next);
    report.iterations = it;
    report.max_delta = delta;
    if (delta <= options.tolerance) {
      report.converged = true;
      break;
    }
  }
  return report;
}

HybridResult HybridDecode(const TestHistory& history, const NoiseModel& noise,
                          const Prior& prior, const MarginalFallback& fallback,
                          const LbpOptions& options) {
  HybridResult result;
  result.lbp = LbpDecode(history, noise, prior, options);
  if (result.lbp.converged) {
    result.marginal = result.lbp.marginal;
  } else {
    result.used_lbp = false;
    result.marginal = fallback();
  }
  return result;
}

HybridResult HybridDecode(const TestHistory& history, const NoiseModel& noise,
                          const Prior& prior, const SmcConfig& smc, Rng& rng,
                          const LbpOptions& options) {
  return HybridDecode(
      history, noise, prior,
      [&] { return SmcFromPrior(prior, history, noise, smc, rng).Marginal(); },
      options);
}

}  // namespace gtboed
