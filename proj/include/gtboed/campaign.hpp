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

// Persistent campaigns: an append-only event log per campaign, replayed
// through a TestingSession on load.
//
// Layout under the data directory:
//   <id>/config.json    canonical session configuration
//   <id>/events.jsonl   one event per line:
//                       {"seq", "kind": "proposed" | "observed",
//                        "timestamp", "groups" | "outcomes"}
//   <id>/posterior.json latest particle snapshot (posterior-based policies)

#ifndef GTBOED_CAMPAIGN_HPP_
#define GTBOED_CAMPAIGN_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "gtboed/json_io.hpp"
#include "gtboed/session.hpp"

namespace gtboed {

enum class CampaignStatus { kReadyToPropose, kAwaitingResults, kExhausted };

const char* CampaignStatusName(CampaignStatus status);

class Campaign {
 public:
  Campaign(std::string id, SessionConfig config);

  const std::string& id() const { return id_; }
  CampaignStatus status() const;
  const TestingSession& session() const { return session_; }
  const Json& events() const { return events_; }

  // Public view: id, status, pending batch, marginal, history, last
  // sequence number and the degenerate-evidence flag if raised.
  Json View() const;
  Json MarginalView() const;

  // Each returns the event to persist, or null when nothing is logged.
  // The campaign is not modified until Commit().
  struct Pending {
    Json event;
    std::unique_ptr<TestingSession> next;
    bool exhausted = false;
  };
  Pending PrepareProposal() const;
  Pending PrepareResults(const TestOutcomes& outcomes) const;
  void Commit(Pending pending);

  void FlagDegenerate(const std::string& message) { flag_ = message; }

  // Applies a logged event during replay; checks proposals against the
  // policy.
  void Replay(const Json& event);

 private:
  std::string id_;
  TestingSession session_;
  Json events_ = Json::array();
  bool exhausted_ = false;
  std::string flag_;
};

class CampaignStore {
 public:
  explicit CampaignStore(std::filesystem::path data_dir);

  // `request` holds the session configuration and an optional "id".
  Json Create(const Json& request);
  Json Get(const std::string& id);
  Json Propose(const std::string& id);
  Json Submit(const std::string& id, const Json& request);
  Json Marginal(const std::string& id);
  Json Events(const std::string& id);
  std::vector<std::string> List();

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Campaign> campaign;
  };
  std::shared_ptr<Entry> Find(const std::string& id);
  std::unique_ptr<Campaign> Load(const std::string& id);
  void Append(const std::string& id, const Json& event);
  void SaveSnapshot(const Campaign& campaign);

  std::filesystem::path root_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> open_;
};

}  // namespace gtboed

#endif  // GTBOED_CAMPAIGN_HPP_
