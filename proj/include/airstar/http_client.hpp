#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace airstar {

// POSTs `body` to `url` (http://host[:port][/path]) and parses the JSON reply.
// Any transport failure, timeout, non-2xx status or unparsable body throws
// BackendUnavailable.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_s);

}  // namespace airstar
