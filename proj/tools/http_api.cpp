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

#include "http_api.hpp"

#include <regex>
#include <string_view>

#include "httplib.h"

namespace gtboed::tools {
namespace {

using Call = gtb_status (*)(gtb_store*, const char*, char**);

ApiResponse Finish(gtb_status status, char** out_json, int ok_status) {
  char* out = *out_json;
  ApiResponse r;
  if (status == GTB_OK) {
    r.status = ok_status;
    r.body = out != nullptr ? out : "{}";
  } else {
    r.status = HttpStatusFor(status);
    r.body = gtb_last_error_json();
  }
  gtb_string_free(out);
  return r;
}

ApiResponse Reject(int status, std::string_view code, std::string_view message) {
  return {status, "{\"code\":\"" + std::string(code) + "\",\"message\":\"" +
                      std::string(message) + "\",\"fields\":[]}"};
}

}  // namespace

int HttpStatusFor(gtb_status status) {
  switch (status) {
    case GTB_OK: return 200;
    case GTB_ERR_INVALID_ARGUMENT:
    case GTB_ERR_CONFIGURATION: return 400;
    case GTB_ERR_NOT_FOUND: return 404;
    case GTB_ERR_CONFLICT: return 409;
    case GTB_ERR_DEGENERATE_EVIDENCE: return 422;
    case GTB_ERR_IO:
    case GTB_ERR_INTERNAL: return 500;
  }
  return 500;
}

ApiResponse Dispatch(gtb_store* store, const std::string& method,
                     const std::string& path, const std::string& body) {
  static const std::regex kCampaign(R"(^/campaigns/([A-Za-z0-9_-]{1,64})(/[a-z]+)?$)");
  char* out = nullptr;
  if (path == "/campaigns") {
    if (method == "POST") {
      return Finish(gtb_campaign_create(store, body.c_str(), &out), &out, 201);
    }
    if (method == "GET") return Finish(gtb_campaign_list(store, &out), &out, 200);
    return Reject(405, "method_not_allowed", "use GET or POST");
  }
  std::smatch m;
  if (!std::regex_match(path, m, kCampaign)) {
    return Reject(404, "not_found", "no such route");
  }
  const std::string id = m[1];
  const std::string tail = m[2];
  if (tail.empty()) {
    if (method != "GET") return Reject(405, "method_not_allowed", "use GET");
    return Finish(gtb_campaign_get(store, id.c_str(), &out), &out, 200);
  }
  if (tail == "/proposal") {
    if (method != "POST") return Reject(405, "method_not_allowed", "use POST");
    return Finish(gtb_campaign_propose(store, id.c_str(), &out), &out, 200);
  }
  if (tail == "/results") {
    if (method != "POST") return Reject(405, "method_not_allowed", "use POST");
    return Finish(gtb_campaign_submit(store, id.c_str(), body.c_str(), &out), &out,
                  200);
  }
  if (tail == "/marginal" || tail == "/events") {
    if (method != "GET") return Reject(405, "method_not_allowed", "use GET");
    const Call call =
        tail == "/marginal" ? gtb_campaign_marginal : gtb_campaign_events;
    return Finish(call(store, id.c_str(), &out), &out, 200);
  }
  return Reject(404, "not_found", "no such route");
}

bool InstallRoutes(httplib::Server& server, gtb_store* store,
                   const std::string& ui_dir) {
  auto handle = [store](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = Dispatch(store, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  const std::string pattern = R"(/campaigns(/[^/]+(/[a-z]+)?)?)";
  server.Get(pattern, handle);
  server.Post(pattern, handle);
  if (!ui_dir.empty()) {
    if (!server.set_mount_point("/ui", ui_dir)) return false;
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_redirect("/ui/");
    });
  }
  return true;
}

}  // namespace gtboed::tools
