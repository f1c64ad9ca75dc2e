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

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "gtboed/gtboed.h"
#include "http_api.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

using Json = nlohmann::json;

httplib::Server* running_server = nullptr;

int Report(gtb_status status) {
  std::cerr << "error (" << gtb_status_name(status) << "): " << gtb_last_error()
            << '\n';
  const Json detail = Json::parse(gtb_last_error_json());
  for (const auto& f : detail.value("fields", Json::array())) {
    std::cerr << "  " << f["field"].get<std::string>() << ": "
              << f["message"].get<std::string>() << '\n';
  }
  return 1;
}

bool ReadFile(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << '\n';
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

// Takes ownership of a C API string.
Json Take(char* text) {
  Json j = Json::parse(text);
  gtb_string_free(text);
  return j;
}

struct Store {
  gtb_store* handle = nullptr;
  ~Store() { gtb_store_close(handle); }
};

int Simulate(const std::string& config_path, size_t runs, uint64_t seed,
             size_t threads, const std::string& out_dir) {
  std::string config;
  if (!ReadFile(config_path, config)) return 1;
  char* summary = nullptr;
  const gtb_status st =
      gtb_simulate(config.c_str(), runs, seed, threads, out_dir.c_str(), &summary);
  if (st != GTB_OK) return Report(st);
  const Json s = Take(summary);
  std::printf("policy %s, %zu runs, mean tests %.3f\n",
              s["policy"].get<std::string>().c_str(), runs,
              s["mean_tests"].get<double>());
  std::printf("%5s %9s %11s %11s\n", "cycle", "threshold", "sensitivity",
              "specificity");
  for (const auto& r : s["metrics"]) {
    std::printf("%5d %9.3f %11.4f %11.4f\n", r["cycle"].get<int>(),
                r["threshold"].get<double>(), r["mean_sensitivity"].get<double>(),
                r["mean_specificity"].get<double>());
  }
  std::printf("wrote %s/metrics.csv and %s/trajectories.jsonl\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int Serve(const std::string& host, int port, const std::string& data,
          const std::string& ui) {
  Store store;
  if (gtb_status st = gtb_store_open(data.c_str(), &store.handle); st != GTB_OK) {
    return Report(st);
  }
  httplib::Server server;
  if (!gtboed::tools::InstallRoutes(server, store.handle, ui)) {
    std::cerr << "error: cannot serve " << ui << " under /ui\n";
    return 1;
  }
  running_server = &server;
  std::signal(SIGINT, [](int) { running_server->stop(); });
  std::signal(SIGTERM, [](int) { running_server->stop(); });
  std::printf("listening on http://%s:%d (data %s)\n", host.c_str(), port,
              data.c_str());
  std::fflush(stdout);
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
    return 1;
  }
  return 0;
}

int Create(const std::string& data, const std::string& config_path,
           const std::string& id) {
  std::string text;
  if (!ReadFile(config_path, text)) return 1;
  Json request = Json::parse(text, nullptr, false);
  if (request.is_discarded()) {
    std::cerr << "error: " << config_path << " is not valid JSON\n";
    return 1;
  }
  if (!id.empty()) request["id"] = id;
  Store store;
  if (gtb_status st = gtb_store_open(data.c_str(), &store.handle); st != GTB_OK) {
    return Report(st);
  }
  char* out = nullptr;
  const gtb_status st =
      gtb_campaign_create(store.handle, request.dump().c_str(), &out);
  if (st != GTB_OK) return Report(st);
  const Json view = Take(out);
  std::printf("%s\n", view["id"].get<std::string>().c_str());
  return 0;
}

void PrintGroups(const Json& groups) {
  for (size_t g = 0; g < groups.size(); ++g) {
    std::printf("  group %zu:", g + 1);
    for (const auto& i : groups[g]) std::printf(" %d", i.get<int>());
    std::printf("\n");
  }
}

void PrintTop(const Json& view, size_t count) {
  std::vector<std::pair<double, size_t>> order;
  const auto& m = view["marginal"];
  for (size_t i = 0; i < m.size(); ++i) order.emplace_back(-m[i].get<double>(), i);
  std::sort(order.begin(), order.end());
  std::printf("highest marginals (%s):\n", view["decoder"].get<std::string>().c_str());
  for (size_t r = 0; r < std::min(count, order.size()); ++r) {
    std::printf("  %4zu  %.4f\n", order[r].second, -order[r].first);
  }
}

// Accepts "0110", "0 1 1 0" or "0,1,1,0".
bool ParseOutcomes(const std::string& line, size_t expected, Json& out) {
  out = Json::array();
  for (char c : line) {
    if (c == '0' || c == '1') {
      out.push_back(c - '0');
    } else if (c != ' ' && c != ',' && c != '\t' && c != '\r') {
      return false;
    }
  }
  return out.size() == expected;
}

int Step(const std::string& data, const std::string& id, size_t top) {
  Store store;
  if (gtb_status st = gtb_store_open(data.c_str(), &store.handle); st != GTB_OK) {
    return Report(st);
  }
  char* out = nullptr;
  gtb_status st = gtb_campaign_get(store.handle, id.c_str(), &out);
  if (st != GTB_OK) return Report(st);
  Json view = Take(out);
  std::printf("campaign %s: policy %s, n=%d, %d tests used\n", id.c_str(),
              view["policy"].get<std::string>().c_str(), view["n"].get<int>(),
              view["tests_used"].get<int>());
  for (;;) {
    const std::string status = view["status"];
    if (status == "exhausted") {
      std::printf("policy exhausted\n");
      PrintTop(view, top);
      return 0;
    }
    if (status == "ready_to_propose") {
      st = gtb_campaign_propose(store.handle, id.c_str(), &out);
      if (st != GTB_OK) return Report(st);
      view = Take(out);
      if (view["status"] == "exhausted") continue;
    }
    const Json& pending = view["pending"];
    std::printf("cycle %zu, pending batch:\n", view["history"].size() + 1);
    PrintGroups(pending);
    Json outcomes;
    for (;;) {
      std::printf("outcomes for %zu groups (0/1 each, q to quit): ", pending.size());
      std::fflush(stdout);
      std::string line;
      if (!std::getline(std::cin, line) || line == "q") {
        std::printf("\n");
        return 0;
      }
      if (ParseOutcomes(line, pending.size(), outcomes)) break;
      std::printf("expected %zu digits\n", pending.size());
    }
    const Json request{{"outcomes", outcomes}, {"seq", view["seq"]}};
    st = gtb_campaign_submit(store.handle, id.c_str(), request.dump().c_str(), &out);
    if (st == GTB_ERR_DEGENERATE_EVIDENCE) {
      Report(st);
      std::printf("outcomes rejected, campaign flagged; state unchanged\n");
      st = gtb_campaign_get(store.handle, id.c_str(), &out);
      if (st != GTB_OK) return Report(st);
      view = Take(out);
      continue;
    }
    if (st != GTB_OK) return Report(st);
    view = Take(out);
    PrintTop(view, top);
  }
}

int Decode(const std::string& tests_path, const std::string& options_path,
           const Json& overrides) {
  std::string tests;
  if (!ReadFile(tests_path, tests)) return 1;
  Json options = Json::object();
  if (!options_path.empty()) {
    std::string text;
    if (!ReadFile(options_path, text)) return 1;
    options = Json::parse(text, nullptr, false);
    if (options.is_discarded()) {
      std::cerr << "error: " << options_path << " is not valid JSON\n";
      return 1;
    }
  }
  options.update(overrides);
  char* out = nullptr;
  const gtb_status st = gtb_decode(tests.c_str(), options.dump().c_str(), &out);
  if (st != GTB_OK) return Report(st);
  std::printf("%s\n", Take(out).dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive noisy group testing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gtb_version());

  auto* simulate = app.add_subcommand("simulate", "Run a batch of simulations");
  std::string config_path, out_dir;
  size_t runs = 100, threads = 0;
  uint64_t seed = 0;
  simulate->add_option("--config", config_path, "Simulation config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--threads", threads,
                       "Worker threads (0 uses all hardware threads)");

  auto* campaign = app.add_subcommand("campaign", "Live campaigns");
  campaign->require_subcommand(1);
  std::string data = "campaigns";

  auto* serve = campaign->add_subcommand("serve", "Serve the campaign HTTP API");
  int port = 8080;
  std::string host = "127.0.0.1", ui;
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--data", data, "Data directory");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--ui", ui, "Static console directory served under /ui")
      ->check(CLI::ExistingDirectory);

  auto* create = campaign->add_subcommand("create", "Create a campaign");
  std::string id;
  create->add_option("--config", config_path, "Campaign config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  create->add_option("--id", id, "Campaign id");
  create->add_option("--data", data, "Data directory");

  auto* step = campaign->add_subcommand("step", "Interactive propose/record loop");
  size_t top = 10;
  step->add_option("--id", id, "Campaign id")->required();
  step->add_option("--data", data, "Data directory");
  step->add_option("--top", top, "Marginals to show after each cycle");

  auto* decode = app.add_subcommand("decode", "Decode a recorded test file");
  std::string tests_path, options_path;
  Json overrides = Json::object();
  double q = 0, sp = 0, se = 0;
  size_t n = 0;
  decode->add_option("--tests", tests_path, "Test file: indices, then outcome")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--options", options_path, "Model options JSON")
      ->check(CLI::ExistingFile);
  auto* q_opt = decode->add_option("--q", q, "Prior infection rate");
  auto* sp_opt = decode->add_option("--specificity", sp, "Test specificity");
  auto* se_opt = decode->add_option("--sensitivity", se, "Test sensitivity");
  auto* n_opt = decode->add_option("--n", n, "Population size");
  auto* seed_opt = decode->add_option("--seed", seed, "Fallback sampler seed");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return Simulate(config_path, runs, seed, threads, out_dir);
  if (serve->parsed()) return Serve(host, port, data, ui);
  if (create->parsed()) return Create(data, config_path, id);
  if (step->parsed()) return Step(data, id, top);
  if (decode->parsed()) {
    if (q_opt->count()) overrides["q"] = q;
    if (sp_opt->count()) overrides["specificity"] = sp;
    if (se_opt->count()) overrides["sensitivity"] = se;
    if (n_opt->count()) overrides["n"] = n;
    if (seed_opt->count()) overrides["seed"] = seed;
    return Decode(tests_path, options_path, overrides);
  }
  return 0;
}
