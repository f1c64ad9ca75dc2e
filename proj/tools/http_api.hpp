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

#ifndef GTBOED_TOOLS_HTTP_API_HPP_
#define GTBOED_TOOLS_HTTP_API_HPP_

#include <string>

#include "gtboed/gtboed.h"

namespace httplib {
class Server;
}

namespace gtboed::tools {

struct ApiResponse {
  int status = 200;
  std::string body;
};

// Maps one campaign request onto the C API. Unknown routes give 404.
ApiResponse Dispatch(gtb_store* store, const std::string& method,
                     const std::string& path, const std::string& body);

int HttpStatusFor(gtb_status status);

// Installs the campaign routes, and /ui as static files when ui_dir is set.
// Returns false if ui_dir is not a directory.
bool InstallRoutes(httplib::Server& server, gtb_store* store,
                   const std::string& ui_dir);

}  // namespace gtboed::tools

#endif  // GTBOED_TOOLS_HTTP_API_HPP_
