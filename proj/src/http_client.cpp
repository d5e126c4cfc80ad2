#include "airstar/http_client.hpp"

#include <httplib.h>

#include "airstar/error.hpp"

namespace airstar {

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_s) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string host = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(host);
  if (!client.is_valid()) fail(ErrorCode::kBackendUnavailable, "bad backend url: " + url);
  const auto usec = static_cast<time_t>(timeout_s * 1e6);
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    fail(ErrorCode::kBackendUnavailable, url + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::kBackendUnavailable, url + ": HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBackendUnavailable, url + ": reply is not JSON: " + e.what());
  }
}

}  // namespace airstar
