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

#include "gtboed/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gtboed/error.hpp"

namespace gtboed {
namespace fs = std::filesystem;
namespace {

std::string Timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

bool ValidId(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

Json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, "corrupt " + path.string() + ": " + e.what());
  }
}

void WriteFileAtomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace " + path.string());
}

}  // namespace

const char* CampaignStatusName(CampaignStatus status) {
  switch (status) {
    case CampaignStatus::kReadyToPropose: return "ready_to_propose";
    case CampaignStatus::kAwaitingResults: return "awaiting_results";
    case CampaignStatus::kExhausted: return "exhausted";
  }
  return "unknown";
}

Campaign::Campaign(std::string id, SessionConfig config)
    : id_(std::move(id)), session_(std::move(config)) {}

CampaignStatus Campaign::status() const {
  if (session_.awaiting_results()) return CampaignStatus::kAwaitingResults;
  if (exhausted_) return CampaignStatus::kExhausted;
  return CampaignStatus::kReadyToPropose;
}

Json Campaign::View() const {
  Json cycles = Json::array();
  Json open;
  for (const Json& e : events_) {
    if (e["kind"] == "proposed") {
      open = e;
    } else {
      cycles.push_back({{"cycle", cycles.size() + 1},
                        {"groups", open["groups"]},
                        {"outcomes", e["outcomes"]}});
    }
  }
  Json j;
  j["id"] = id_;
  j["status"] = CampaignStatusName(status());
  j["policy"] = session_.config().policy.name;
  j["n"] = session_.config().prior.size();
  j["tests_per_cycle"] = session_.config().tests_per_cycle;
  j["seq"] = events_.size();
  j["pending"] = BatchToJson(session_.pending_batch());
  j["marginal"] = session_.marginal();
  j["decoder"] = session_.last_used_lbp() ? "lbp" : "smc";
  j["history"] = std::move(cycles);
  j["tests_used"] = session_.history().size();
  j["flag"] = flag_.empty() ? Json(nullptr) : Json(flag_);
  return j;
}

Json Campaign::MarginalView() const {
  const auto& m = session_.marginal();
  std::vector<uint32_t> order(m.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](uint32_t a, uint32_t b) { return m[a] > m[b]; });
  Json sorted = Json::array();
  for (uint32_t i : order) {
    sorted.push_back({{"individual", i}, {"probability", m[i]}});
  }
  return {{"id", id_},
          {"seq", events_.size()},
          {"marginal", m},
          {"sorted", std::move(sorted)},
          {"decoder", session_.last_used_lbp() ? "lbp" : "smc"}};
}

Campaign::Pending Campaign::PrepareProposal() const {
  if (session_.awaiting_results()) {
    throw Error(ErrorCode::kConflict,
                "campaign " + id_ + " is awaiting results for its pending batch");
  }
  Pending p;
  p.next = std::make_unique<TestingSession>(session_);
  if (exhausted_) {
    p.exhausted = true;
    return p;
  }
  const GroupBatch batch = p.next->Propose();
  if (batch.empty()) {
    p.exhausted = true;
    return p;
  }
  p.event = {{"seq", events_.size() + 1},
             {"kind", "proposed"},
             {"timestamp", Timestamp()},
             {"groups", BatchToJson(batch)}};
  return p;
}

Campaign::Pending Campaign::PrepareResults(const TestOutcomes& outcomes) const {
  if (!session_.awaiting_results()) {
    throw Error(ErrorCode::kConflict,
                "campaign " + id_ + " has no batch awaiting results");
  }
  Pending p;
  p.next = std::make_unique<TestingSession>(session_);
  p.next->Observe(outcomes);
  p.event = {{"seq", events_.size() + 1},
             {"kind", "observed"},
             {"timestamp", Timestamp()},
             {"outcomes", OutcomesToJson(outcomes)}};
  return p;
}

void Campaign::Commit(Pending pending) {
  session_ = std::move(*pending.next);
  if (pending.exhausted) exhausted_ = true;
  if (!pending.event.is_null()) {
    events_.push_back(std::move(pending.event));
    flag_.clear();
  }
}

void Campaign::Replay(const Json& event) {
  if (!event.is_object() || !event.contains("seq") || !event.contains("kind")) {
    throw Error(ErrorCode::kIo, "malformed event in campaign " + id_);
  }
  if (event["seq"] != events_.size() + 1) {
    throw Error(ErrorCode::kIo, "event sequence gap in campaign " + id_);
  }
  if (event["kind"] == "proposed") {
    auto pending = PrepareProposal();
    if (pending.exhausted ||
        pending.event["groups"] != BatchToJson(BatchFromJson(event["groups"]))) {
      throw Error(ErrorCode::kInternal,
                  "event log of campaign " + id_ +
                      " diverges from the policy at seq " +
                      event["seq"].dump());
    }
    pending.event = event;
    Commit(std::move(pending));
  } else if (event["kind"] == "observed") {
    auto pending = PrepareResults(OutcomesFromJson(event.at("outcomes")));
    pending.event = event;
    Commit(std::move(pending));
  } else {
    throw Error(ErrorCode::kIo, "unknown event kind in campaign " + id_);
  }
}

CampaignStore::CampaignStore(fs::path data_dir) : root_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + root_.string());
}

std::vector<std::string> CampaignStore::List() {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "config.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::unique_ptr<Campaign> CampaignStore::Load(const std::string& id) {
  const fs::path dir = root_ / id;
  auto campaign = std::make_unique<Campaign>(
      id, SessionConfigFromJson(ReadJsonFile(dir / "config.json")));
  std::ifstream in(dir / "events.jsonl");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json event;
    try {
      event = Json::parse(line);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::kIo, "corrupt event at line " +
                                      std::to_string(line_no) + " of campaign " + id);
    }
    campaign->Replay(event);
  }
  return campaign;
}

std::shared_ptr<CampaignStore::Entry> CampaignStore::Find(const std::string& id) {
  if (!ValidId(id)) throw Error(ErrorCode::kNotFound, "no campaign " + id);
  std::lock_guard lock(mutex_);
  if (auto it = open_.find(id); it != open_.end()) return it->second;
  if (!fs::exists(root_ / id / "config.json")) {
    throw Error(ErrorCode::kNotFound, "no campaign " + id);
  }
  auto entry = std::make_shared<Entry>();
  entry->campaign = Load(id);
  open_[id] = entry;
  return entry;
}

void CampaignStore::Append(const std::string& id, const Json& event) {
  std::ofstream out(root_ / id / "events.jsonl", std::ios::app);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot append to the log of " + id);
}

void CampaignStore::SaveSnapshot(const Campaign& campaign) {
  const auto& posterior = campaign.session().posterior();
  if (!posterior) return;
  WriteFileAtomically(root_ / campaign.id() / "posterior.json",
                      PosteriorToJson(*posterior).dump());
}

Json CampaignStore::Create(const Json& request) {
  if (!request.is_object()) {
    ThrowInvalidArgument("campaign request must be a JSON object");
  }
  Json config = request;
  std::string id;
  if (config.contains("id")) {
    if (!config["id"].is_string() || !ValidId(config["id"].get<std::string>())) {
      throw Error(ErrorCode::kInvalidArgument,
                  "invalid configuration: id: use 1-64 letters, digits, - or _",
                  {{"id", "use 1-64 letters, digits, - or _"}});
    }
    id = config["id"].get<std::string>();
    config.erase("id");
  }
  SessionConfig session = SessionConfigFromJson(config);

  std::lock_guard lock(mutex_);
  if (id.empty()) {
    std::random_device device;
    char buffer[16];
    do {
      std::snprintf(buffer, sizeof(buffer), "c%08x", device());
      id = buffer;
    } while (fs::exists(root_ / id));
  } else if (fs::exists(root_ / id)) {
    throw Error(ErrorCode::kConflict, "campaign " + id + " already exists");
  }
  auto campaign = std::make_unique<Campaign>(id, session);
  const fs::path dir = root_ / id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  WriteFileAtomically(dir / "config.json", SessionConfigToJson(session).dump(2));
  std::ofstream(dir / "events.jsonl", std::ios::app).flush();
  SaveSnapshot(*campaign);
  auto entry = std::make_shared<Entry>();
  entry->campaign = std::move(campaign);
  Json view = entry->campaign->View();
  open_[id] = std::move(entry);
  return view;
}

Json CampaignStore::Get(const std::string& id) {
  auto entry = Find(id);
  std::lock_guard lock(entry->mutex);
  return entry->campaign->View();
}

Json CampaignStore::Propose(const std::string& id) {
  auto entry = Find(id);
  std::lock_guard lock(entry->mutex);
  Campaign& c = *entry->campaign;
  auto pending = c.PrepareProposal();
  Json proposal = pending.event.is_null() ? Json::array() : pending.event["groups"];
  if (!pending.event.is_null()) Append(id, pending.event);
  c.Commit(std::move(pending));
  Json view = c.View();
  view["proposal"] = std::move(proposal);
  return view;
}

Json CampaignStore::Submit(const std::string& id, const Json& request) {
  auto entry = Find(id);
  std::lock_guard lock(entry->mutex);
  Campaign& c = *entry->campaign;
  const Json* outcomes = &request;
  if (request.is_object()) {
    if (!request.contains("outcomes")) {
      throw Error(ErrorCode::kInvalidArgument, "missing outcomes",
                  {{"outcomes", "is required"}});
    }
    if (request.contains("seq") && request["seq"] != c.events().size()) {
      throw Error(ErrorCode::kConflict,
                  "stale submission: campaign is at seq " +
                      std::to_string(c.events().size()));
    }
    outcomes = &request["outcomes"];
  }
  const TestOutcomes y = OutcomesFromJson(*outcomes);
  Campaign::Pending pending;
  try {
    pending = c.PrepareResults(y);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateEvidence) c.FlagDegenerate(e.what());
    throw;
  }
  Append(id, pending.event);
  c.Commit(std::move(pending));
  SaveSnapshot(c);
  return c.View();
}

Json CampaignStore::Marginal(const std::string& id) {
  auto entry = Find(id);
  std::lock_guard lock(entry->mutex);
  return entry->campaign->MarginalView();
}

Json CampaignStore::Events(const std::string& id) {
  auto entry = Find(id);
  std::lock_guard lock(entry->mutex);
  return {{"id", id}, {"events", entry->campaign->events()}};
}

}  // namespace gtboed
