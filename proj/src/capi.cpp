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

#include "gtboed/gtboed.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <thread>

#include "gtboed/campaign.hpp"
#include "gtboed/decoder.hpp"
#include "gtboed/error.hpp"
#include "gtboed/json_io.hpp"
#include "gtboed/optimizer.hpp"
#include "gtboed/simulator.hpp"
#include "gtboed/smc.hpp"
#include "gtboed/utility.hpp"

struct gtb_store {
  std::unique_ptr<gtboed::CampaignStore> store;
};

struct gtb_posterior {
  gtboed::SessionConfig config;
  gtboed::TestHistory history;
  gtboed::ParticlePosterior posterior;
  gtboed::Rng rng{0};
};

namespace {

using gtboed::Error;
using gtboed::ErrorCode;
using gtboed::Json;

thread_local std::string last_error;
thread_local std::string last_error_json = "{}";

gtb_status ToStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return GTB_ERR_INVALID_ARGUMENT;
    case ErrorCode::kConfiguration: return GTB_ERR_CONFIGURATION;
    case ErrorCode::kDegenerateEvidence: return GTB_ERR_DEGENERATE_EVIDENCE;
    case ErrorCode::kNotFound: return GTB_ERR_NOT_FOUND;
    case ErrorCode::kConflict: return GTB_ERR_CONFLICT;
    case ErrorCode::kIo: return GTB_ERR_IO;
    case ErrorCode::kInternal: return GTB_ERR_INTERNAL;
  }
  return GTB_ERR_INTERNAL;
}

gtb_status Fail(gtb_status status, const std::string& message,
                const Error::FieldErrors& fields = {}) {
  last_error = message;
  Json j{{"code", gtb_status_name(status)}, {"message", message}};
  Json list = Json::array();
  for (const auto& [field, text] : fields) {
    list.push_back({{"field", field}, {"message", text}});
  }
  j["fields"] = std::move(list);
  last_error_json = j.dump();
  return status;
}

template <class F>
gtb_status Guard(F&& body) {
  try {
    body();
    last_error.clear();
    last_error_json = "{}";
    return GTB_OK;
  } catch (const Error& e) {
    return Fail(ToStatus(e.code()), e.what(), e.fields());
  } catch (const Json::parse_error& e) {
    return Fail(GTB_ERR_INVALID_ARGUMENT, std::string("malformed JSON: ") + e.what());
  } catch (const Json::exception& e) {
    return Fail(GTB_ERR_INVALID_ARGUMENT, std::string("unexpected JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return Fail(GTB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(GTB_ERR_INTERNAL, e.what());
  }
}

char* Copy(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Emit(const Json& j, char** out) {
  if (out == nullptr) gtboed::ThrowInvalidArgument("output pointer is null");
  *out = Copy(j.dump());
}

void Require(const void* p, const char* what) {
  if (p == nullptr) gtboed::ThrowInvalidArgument(std::string(what) + " is null");
}

Json ParseOrEmpty(const char* text) {
  if (text == nullptr || *text == '\0') return Json::object();
  return Json::parse(text);
}

gtboed::CampaignStore& StoreOf(gtb_store* store) {
  Require(store, "store");
  return *store->store;
}

}  // namespace

extern "C" {

const char* gtb_version(void) { return "0.1.0"; }

const char* gtb_status_name(gtb_status status) {
  switch (status) {
    case GTB_OK: return "ok";
    case GTB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case GTB_ERR_CONFIGURATION: return "configuration";
    case GTB_ERR_DEGENERATE_EVIDENCE: return "degenerate_evidence";
    case GTB_ERR_NOT_FOUND: return "not_found";
    case GTB_ERR_CONFLICT: return "conflict";
    case GTB_ERR_IO: return "io";
    case GTB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* gtb_last_error(void) { return last_error.c_str(); }
const char* gtb_last_error_json(void) { return last_error_json.c_str(); }

void gtb_string_free(char* s) { std::free(s); }

gtb_status gtb_store_open(const char* data_dir, gtb_store** out) {
  return Guard([&] {
    Require(data_dir, "data_dir");
    Require(out, "out");
    auto store = std::make_unique<gtb_store>();
    store->store = std::make_unique<gtboed::CampaignStore>(data_dir);
    *out = store.release();
  });
}

void gtb_store_close(gtb_store* store) { delete store; }

gtb_status gtb_campaign_create(gtb_store* store, const char* request,
                               char** out_json) {
  return Guard([&] {
    Require(request, "request");
    Emit(StoreOf(store).Create(Json::parse(request)), out_json);
  });
}

gtb_status gtb_campaign_get(gtb_store* store, const char* id, char** out_json) {
  return Guard([&] {
    Require(id, "id");
    Emit(StoreOf(store).Get(id), out_json);
  });
}

gtb_status gtb_campaign_propose(gtb_store* store, const char* id,
                                char** out_json) {
  return Guard([&] {
    Require(id, "id");
    Emit(StoreOf(store).Propose(id), out_json);
  });
}

gtb_status gtb_campaign_submit(gtb_store* store, const char* id,
                               const char* request, char** out_json) {
  return Guard([&] {
    Require(id, "id");
    Require(request, "request");
    Emit(StoreOf(store).Submit(id, Json::parse(request)), out_json);
  });
}

gtb_status gtb_campaign_marginal(gtb_store* store, const char* id,
                                 char** out_json) {
  return Guard([&] {
    Require(id, "id");
    Emit(StoreOf(store).Marginal(id), out_json);
  });
}

gtb_status gtb_campaign_events(gtb_store* store, const char* id,
                               char** out_json) {
  return Guard([&] {
    Require(id, "id");
    Emit(StoreOf(store).Events(id), out_json);
  });
}

gtb_status gtb_campaign_list(gtb_store* store, char** out_json) {
  return Guard([&] { Emit(Json{{"campaigns", StoreOf(store).List()}}, out_json); });
}

gtb_status gtb_simulate(const char* config_json, size_t runs, uint64_t seed,
                        size_t parallelism, const char* out_dir,
                        char** summary_json) {
  return Guard([&] {
    Require(config_json, "config_json");
    Require(out_dir, "out_dir");
    const auto config = gtboed::SimulationConfigFromJson(Json::parse(config_json));
    if (parallelism == 0) {
      parallelism = std::max(1u, std::thread::hardware_concurrency());
    }
    const auto result = gtboed::RunBatch(config, runs, seed, parallelism);

    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
    const std::string& policy = config.policy.policy.name;
    {
      std::ofstream csv(dir / "metrics.csv", std::ios::trunc);
      gtboed::WriteMetricsCsv(csv, result.metrics);
      std::ofstream jsonl(dir / "trajectories.jsonl", std::ios::trunc);
      for (const auto& t : result.trajectories) {
        gtboed::WriteTrajectoryJsonl(jsonl, policy, t);
      }
      Json used = gtboed::SimulationConfigToJson(config);
      used["runs"] = runs;
      used["seed"] = seed;
      std::ofstream(dir / "config.json", std::ios::trunc) << used.dump(2) << '\n';
      if (!csv || !jsonl) throw Error(ErrorCode::kIo, "cannot write results");
    }
    if (summary_json != nullptr) {
      double tests = 0.0;
      for (const auto& t : result.trajectories) {
        tests += static_cast<double>(t.TotalTests());
      }
      Json rows = Json::array();
      for (const auto& r : result.metrics) {
        rows.push_back({{"cycle", r.cycle},
                        {"threshold", r.threshold},
                        {"mean_sensitivity", r.mean_sensitivity},
                        {"mean_specificity", r.mean_specificity},
                        {"n_runs", r.n_runs},
                        {"n_sens_defined", r.n_sens_defined}});
      }
      Emit({{"policy", policy},
            {"runs", runs},
            {"seed", seed},
            {"mean_tests", tests / static_cast<double>(runs)},
            {"metrics", std::move(rows)}},
           summary_json);
    }
  });
}

gtb_status gtb_decode(const char* tests_text, const char* options_json,
                      char** out_json) {
  return Guard([&] {
    Require(tests_text, "tests_text");
    const gtboed::TestHistory history = gtboed::ParseTestRecords(tests_text);
    Json options = ParseOrEmpty(options_json);
    if (!options.is_object()) {
      gtboed::ThrowInvalidArgument("decode options must be a JSON object");
    }
    size_t n = 1, largest = 1;
    for (const auto& g : history.groups) {
      n = std::max<size_t>(n, g.members().back() + 1);
      largest = std::max(largest, g.size());
    }
    if (!options.contains("n")) options["n"] = n;
    if (!options.contains("max_group_size")) options["max_group_size"] = largest;
    options["policy"] = "individual";
    const auto config = gtboed::SessionConfigFromJson(options);
    gtboed::Rng rng = gtboed::DeriveRng(config.seed, 0, "smc");
    const auto result = gtboed::HybridDecode(history, config.noise, config.prior,
                                             config.smc, rng, config.lbp);
    Emit({{"n", config.prior.size()},
          {"tests", history.size()},
          {"marginal", result.marginal},
          {"decoder", result.used_lbp ? "lbp" : "smc"},
          {"lbp_converged", result.lbp.converged},
          {"lbp_iterations", result.lbp.iterations},
          {"lbp_max_delta", result.lbp.max_delta},
          {"oscillating", gtboed::DetectOscillation(result.lbp)}},
         out_json);
  });
}

gtb_status gtb_posterior_create(const char* config_json, gtb_posterior** out) {
  return Guard([&] {
    Require(out, "out");
    Json options = ParseOrEmpty(config_json);
    if (!options.is_object()) {
      gtboed::ThrowInvalidArgument("posterior options must be a JSON object");
    }
    options["policy"] = "individual";
    auto p = std::make_unique<gtb_posterior>();
    p->config = gtboed::SessionConfigFromJson(options);
    p->rng = gtboed::DeriveRng(p->config.seed, 0, "smc");
    p->posterior = gtboed::ParticlePosterior::SampleFromPrior(
        p->config.prior, p->config.smc.num_particles, p->rng);
    *out = p.release();
  });
}

void gtb_posterior_free(gtb_posterior* posterior) { delete posterior; }

size_t gtb_posterior_population(const gtb_posterior* posterior) {
  return posterior ? posterior->posterior.population() : 0;
}

size_t gtb_posterior_particles(const gtb_posterior* posterior) {
  return posterior ? posterior->posterior.size() : 0;
}

gtb_status gtb_posterior_update(gtb_posterior* posterior,
                                const char* groups_json,
                                const char* outcomes_json) {
  return Guard([&] {
    Require(posterior, "posterior");
    Require(groups_json, "groups_json");
    Require(outcomes_json, "outcomes_json");
    const auto batch = gtboed::BatchFromJson(Json::parse(groups_json));
    const auto y = gtboed::OutcomesFromJson(Json::parse(outcomes_json));
    gtboed::Rng rng = posterior->rng;
    auto result = gtboed::SmcUpdate(posterior->posterior, posterior->config.prior,
                                    posterior->history, batch, y,
                                    posterior->config.noise,
                                    posterior->config.smc, rng);
    posterior->posterior = std::move(result.posterior);
    posterior->history.Append(batch, y);
    posterior->rng = rng;
  });
}

gtb_status gtb_posterior_marginal(const gtb_posterior* posterior, double* out,
                                  size_t length) {
  return Guard([&] {
    Require(posterior, "posterior");
    Require(out, "out");
    const auto m = posterior->posterior.Marginal();
    if (length < m.size()) {
      gtboed::ThrowInvalidArgument("output buffer holds fewer than n values");
    }
    std::copy(m.begin(), m.end(), out);
  });
}

gtb_status gtb_posterior_mutual_information(const gtb_posterior* posterior,
                                            const char* groups_json,
                                            double* out) {
  return Guard([&] {
    Require(posterior, "posterior");
    Require(groups_json, "groups_json");
    Require(out, "out");
    *out = gtboed::MutualInformation(posterior->posterior,
                                     gtboed::BatchFromJson(Json::parse(groups_json)),
                                     posterior->config.noise);
  });
}

gtb_status gtb_posterior_propose(const gtb_posterior* posterior, size_t groups,
                                 char** out_json) {
  return Guard([&] {
    Require(posterior, "posterior");
    gtboed::GreedyConfig config;
    config.num_groups = groups;
    config.max_group_size = posterior->config.max_group_size;
    const auto result =
        gtboed::GreedyMiMax(posterior->posterior, posterior->config.noise, config);
    Emit({{"groups", gtboed::BatchToJson(result.batch)},
          {"utilities", result.utilities}},
         out_json);
  });
}

gtb_status gtb_posterior_snapshot(const gtb_posterior* posterior,
                                  char** out_json) {
  return Guard([&] {
    Require(posterior, "posterior");
    Emit(gtboed::PosteriorToJson(posterior->posterior), out_json);
  });
}

gtb_status gtb_posterior_restore(gtb_posterior* posterior,
                                 const char* snapshot_json) {
  return Guard([&] {
    Require(posterior, "posterior");
    Require(snapshot_json, "snapshot_json");
    auto restored = gtboed::PosteriorFromJson(Json::parse(snapshot_json));
    if (restored.population() != posterior->posterior.population()) {
      gtboed::ThrowInvalidArgument("snapshot population does not match");
    }
    posterior->posterior = std::move(restored);
  });
}

}  // extern "C"
