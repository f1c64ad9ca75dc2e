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

#include "gtboed/json_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <utility>

#include "gtboed/error.hpp"

namespace gtboed {
namespace {

// Collects field errors instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(const Json& j, std::string prefix = "")
      : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) Fail("", "must be a JSON object");
  }

  bool Has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const Json& At(const char* key) const { return j_.at(key); }

  template <class T>
  T Number(const char* key, T fallback) {
    if (!Has(key)) return fallback;
    const Json& v = j_.at(key);
    if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return Fail(key, "must be a number"), fallback;
    } else {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<int64_t>() < 0 &&
                                     !v.is_number_unsigned())) {
        return Fail(key, "must be a non-negative integer"), fallback;
      }
    }
    return v.get<T>();
  }

  std::string String(const char* key, std::string fallback) {
    if (!Has(key)) return fallback;
    if (!j_.at(key).is_string()) return Fail(key, "must be a string"), fallback;
    return j_.at(key).get<std::string>();
  }

  void Fail(const std::string& key, const std::string& message) {
    fields_.emplace_back(prefix_ + key, message);
  }

  Error::FieldErrors& fields() { return fields_; }

  void Raise(const char* what) {
    if (fields_.empty()) return;
    std::string message = std::string(what) + ":";
    for (const auto& [field, text] : fields_) {
      message += " " + field + ": " + text + ";";
    }
    message.pop_back();
    throw Error(ErrorCode::kInvalidArgument, message, fields_);
  }

 private:
  const Json& j_;
  std::string prefix_;
  Error::FieldErrors fields_;
};

std::vector<double> Table(Reader& r, const char* key, double fallback,
                          size_t length) {
  if (!r.Has(key)) return std::vector<double>(length, fallback);
  const Json& v = r.At(key);
  if (v.is_number()) return std::vector<double>(length, v.get<double>());
  if (v.is_array() && !v.empty() &&
      std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); })) {
    return v.get<std::vector<double>>();
  }
  r.Fail(key, "must be a number or a non-empty array of numbers");
  return std::vector<double>(length, fallback);
}

Prior ReadPrior(Reader& r, size_t n, double default_q) {
  if (r.Has("rates")) {
    const Json& v = r.At("rates");
    if (!v.is_array() || v.size() != n ||
        !std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); })) {
      r.Fail("rates", "must be an array of n numbers");
      return Prior::Uniform(n, default_q);
    }
    Prior p{v.get<std::vector<double>>()};
    for (double q : p.rates) {
      if (!(q > 0.0 && q < 1.0)) {
        r.Fail("rates", "entries must lie in (0, 1)");
        return Prior::Uniform(n, default_q);
      }
    }
    return p;
  }
  const double q = r.Number<double>("q", default_q);
  if (!(q > 0.0 && q < 1.0)) {
    r.Fail("q", "must lie in (0, 1)");
    return Prior::Uniform(n, default_q);
  }
  return Prior::Uniform(n, q);
}

NoiseModel ReadNoise(Reader& r, size_t max_group_size, double sp_default,
                     double se_default) {
  const size_t length = std::max<size_t>(max_group_size, 1);
  auto sp = Table(r, "specificity", sp_default, length);
  auto se = Table(r, "sensitivity", se_default, length);
  if (sp.size() != se.size()) {
    r.Fail("sensitivity", "specificity and sensitivity tables differ in length");
    return NoiseModel::Constant(sp_default, se_default, length);
  }
  try {
    return NoiseModel::FromTables(std::move(sp), std::move(se));
  } catch (const Error& e) {
    r.Fail("specificity", e.what());
    return NoiseModel::Constant(sp_default, se_default, length);
  }
}

std::string Hex(uint64_t w) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, w);
  return buffer;
}

}  // namespace

Json BatchToJson(const GroupBatch& batch) {
  Json out = Json::array();
  for (const Group& g : batch) {
    out.push_back(std::vector<uint32_t>(g.members().begin(), g.members().end()));
  }
  return out;
}

GroupBatch BatchFromJson(const Json& j) {
  if (!j.is_array()) ThrowInvalidArgument("groups must be an array");
  GroupBatch out;
  for (const Json& g : j) {
    if (!g.is_array() || g.empty()) {
      ThrowInvalidArgument("each group must be a non-empty array of indices");
    }
    std::vector<uint32_t> members;
    for (const Json& i : g) {
      if (!i.is_number_unsigned() && !(i.is_number_integer() && i.get<int64_t>() >= 0)) {
        ThrowInvalidArgument("group members must be non-negative integers");
      }
      members.push_back(i.get<uint32_t>());
    }
    out.emplace_back(std::move(members));
  }
  return out;
}

Json OutcomesToJson(const TestOutcomes& y) {
  Json out = Json::array();
  for (uint8_t v : y) out.push_back(static_cast<int>(v));
  return out;
}

TestOutcomes OutcomesFromJson(const Json& j) {
  if (!j.is_array()) ThrowInvalidArgument("outcomes must be an array");
  TestOutcomes out;
  for (const Json& v : j) {
    if (v.is_boolean()) {
      out.push_back(v.get<bool>() ? 1 : 0);
    } else if (v.is_number_integer() && (v.get<int64_t>() == 0 || v.get<int64_t>() == 1)) {
      out.push_back(static_cast<uint8_t>(v.get<int64_t>()));
    } else {
      ThrowInvalidArgument("outcomes must be 0/1 or booleans");
    }
  }
  return out;
}

SessionConfig SessionConfigFromJson(const Json& j) {
  Reader r(j);
  r.Raise("invalid configuration");
  SessionConfig c;
  const size_t n = r.Number<size_t>("n", 70);
  if (n < 1 || n > kMaxPopulation) r.Fail("n", "must lie in [1, 1024]");
  const size_t safe_n = std::clamp<size_t>(n, 1, kMaxPopulation);
  c.prior = ReadPrior(r, safe_n, 0.05);
  c.max_group_size = r.Number<size_t>("max_group_size", 10);
  c.tests_per_cycle = r.Number<size_t>("tests_per_cycle", 8);
  c.noise = ReadNoise(r, c.max_group_size, 0.97, 0.85);
  const std::string policy = r.String("policy", "g_mimax");
  try {
    c.policy = PolicySpec::Named(policy);
  } catch (const Error&) {
    r.Fail("policy", "unknown policy '" + policy + "'");
  }
  if (r.Has("assay") || r.Has("assay_file")) {
    try {
      if (r.Has("assay")) {
        const Json& a = r.At("assay");
        if (a.is_string()) {
          c.assay = FixedAssay::Parse(a.get<std::string>(), safe_n, c.max_group_size);
        } else {
          GroupBatch groups = BatchFromJson(a);
          for (const Group& g : groups) g.Validate(safe_n, c.max_group_size);
          c.assay = FixedAssay(std::move(groups));
        }
      } else {
        c.assay = FixedAssay::Load(r.String("assay_file", ""), safe_n,
                                   c.max_group_size);
      }
    } catch (const Error& e) {
      r.Fail(r.Has("assay") ? "assay" : "assay_file", e.what());
    }
  }
  if (r.Has("smc")) {
    Reader s(r.At("smc"), "smc.");
    c.smc.num_particles = s.Number<size_t>("num_particles", c.smc.num_particles);
    c.smc.target_ess = s.Number<double>("target_ess", c.smc.target_ess);
    c.smc.mcmc_sweeps = s.Number<int>("mcmc_sweeps", c.smc.mcmc_sweeps);
    c.smc.bisection_tolerance =
        s.Number<double>("bisection_tolerance", c.smc.bisection_tolerance);
    c.smc.bisection_max_iterations =
        s.Number<int>("bisection_max_iterations", c.smc.bisection_max_iterations);
    const std::string kernel = s.String("kernel", "modified_gibbs");
    if (kernel == "gibbs") {
      c.smc.kernel = McmcKernel::kGibbs;
    } else if (kernel == "modified_gibbs") {
      c.smc.kernel = McmcKernel::kModifiedGibbs;
    } else {
      s.Fail("kernel", "must be gibbs or modified_gibbs");
    }
    for (auto& f : s.fields()) r.fields().push_back(f);
  }
  if (r.Has("lbp")) {
    Reader l(r.At("lbp"), "lbp.");
    c.lbp.max_iterations = l.Number<int>("max_iterations", c.lbp.max_iterations);
    c.lbp.tolerance = l.Number<double>("tolerance", c.lbp.tolerance);
    for (auto& f : l.fields()) r.fields().push_back(f);
  }
  c.seed = r.Number<uint64_t>("seed", 0);
  r.Raise("invalid configuration");
  c.Validate();
  return c;
}

Json SessionConfigToJson(const SessionConfig& c) {
  Json j;
  j["n"] = c.prior.size();
  j["rates"] = c.prior.rates;
  j["specificity"] = c.noise.specificity_table();
  j["sensitivity"] = c.noise.sensitivity_table();
  j["max_group_size"] = c.max_group_size;
  j["tests_per_cycle"] = c.tests_per_cycle;
  j["policy"] = c.policy.name;
  if (c.assay.size()) j["assay"] = BatchToJson(c.assay.groups());
  j["smc"] = {{"num_particles", c.smc.num_particles},
              {"target_ess", c.smc.target_ess},
              {"mcmc_sweeps", c.smc.mcmc_sweeps},
              {"kernel", c.smc.kernel == McmcKernel::kGibbs ? "gibbs"
                                                            : "modified_gibbs"},
              {"bisection_tolerance", c.smc.bisection_tolerance},
              {"bisection_max_iterations", c.smc.bisection_max_iterations}};
  j["lbp"] = {{"max_iterations", c.lbp.max_iterations},
              {"tolerance", c.lbp.tolerance}};
  j["seed"] = c.seed;
  return j;
}

SimulationConfig SimulationConfigFromJson(const Json& j) {
  SimulationConfig c;
  c.policy = SessionConfigFromJson(j);
  Reader r(j);
  c.cycles = r.Number<size_t>("cycles", 5);
  if (r.Has("thresholds")) {
    const Json& t = r.At("thresholds");
    if (t.is_array() &&
        std::all_of(t.begin(), t.end(), [](const Json& e) { return e.is_number(); })) {
      c.thresholds = t.get<std::vector<double>>();
    } else {
      r.Fail("thresholds", "must be an array of numbers");
    }
  }
  c.truth_prior = c.policy.prior;
  c.truth_noise = c.policy.noise;
  if (r.Has("truth")) {
    Reader t(r.At("truth"), "truth.");
    if (t.Has("q") || t.Has("rates")) {
      c.truth_prior = ReadPrior(t, c.policy.prior.size(), c.policy.prior.MeanRate());
    }
    if (t.Has("specificity") || t.Has("sensitivity")) {
      c.truth_noise = ReadNoise(t, c.policy.max_group_size,
                                c.policy.noise.specificity(1),
                                c.policy.noise.sensitivity(1));
    }
    for (auto& f : t.fields()) r.fields().push_back(f);
  }
  r.Raise("invalid simulation configuration");
  c.Validate();
  return c;
}

Json SimulationConfigToJson(const SimulationConfig& c) {
  Json j = SessionConfigToJson(c.policy);
  j["cycles"] = c.cycles;
  j["thresholds"] = c.thresholds;
  j["truth"] = {{"rates", c.truth_prior.rates},
                {"specificity", c.truth_noise.specificity_table()},
                {"sensitivity", c.truth_noise.sensitivity_table()}};
  return j;
}

Json PosteriorToJson(const ParticlePosterior& posterior) {
  const auto& cloud = posterior.particles();
  Json particles = Json::array();
  for (size_t i = 0; i < cloud.size(); ++i) {
    std::string bits;
    for (uint64_t w : cloud.particle(i)) bits += Hex(w);
    particles.push_back(std::move(bits));
  }
  Json j;
  j["format"] = "gtboed.posterior";
  j["version"] = kSnapshotVersion;
  j["n"] = cloud.population();
  j["N"] = cloud.size();
  j["words"] = cloud.words_per_particle();
  j["particles"] = std::move(particles);
  j["weights"] = std::vector<double>(posterior.weights().begin(),
                                     posterior.weights().end());
  return j;
}

ParticlePosterior PosteriorFromJson(const Json& j) {
  try {
    if (j.at("format") != "gtboed.posterior") {
      ThrowInvalidArgument("not a posterior snapshot");
    }
    if (j.at("version").get<int>() != kSnapshotVersion) {
      ThrowInvalidArgument("unsupported snapshot version");
    }
    const size_t n = j.at("n").get<size_t>();
    const size_t count = j.at("N").get<size_t>();
    if (n < 1 || n > kMaxPopulation || count < 1) {
      ThrowInvalidArgument("snapshot dimensions out of range");
    }
    const size_t words = WordsFor(n);
    if (j.at("words").get<size_t>() != words) {
      ThrowInvalidArgument("snapshot word count does not match n");
    }
    const Json& particles = j.at("particles");
    auto weights = j.at("weights").get<std::vector<double>>();
    if (particles.size() != count || weights.size() != count) {
      ThrowInvalidArgument("snapshot arrays do not match N");
    }
    ParticleCloud cloud(n, count);
    const uint64_t tail = n % 64 ? (uint64_t{1} << (n % 64)) - 1 : ~uint64_t{0};
    for (size_t i = 0; i < count; ++i) {
      const auto bits = particles[i].get<std::string>();
      if (bits.size() != words * 16) ThrowInvalidArgument("bad particle length");
      auto out = cloud.mutable_particle(i);
      for (size_t w = 0; w < words; ++w) {
        size_t used = 0;
        const std::string chunk = bits.substr(w * 16, 16);
        const uint64_t value = std::stoull(chunk, &used, 16);
        if (used != 16) ThrowInvalidArgument("bad hex in particle");
        out[w] = value;
      }
      if (out[words - 1] & ~tail) ThrowInvalidArgument("bits set beyond n");
    }
    return ParticlePosterior::WithStoredWeights(std::move(cloud),
                                                std::move(weights));
  } catch (const Json::exception& e) {
    ThrowInvalidArgument(std::string("malformed snapshot: ") + e.what());
  } catch (const std::invalid_argument&) {
    ThrowInvalidArgument("bad hex in particle");
  }
}

}  // namespace gtboed
